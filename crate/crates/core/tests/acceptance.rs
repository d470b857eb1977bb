//! Acceptance gate. Every criterion prints one `PASS`/`FAIL` line; the test
//! fails if any criterion does.
//!
//! Run with `cargo test -p proxcert --test acceptance -- --nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proxcert::certificates::{
    certify_prop2_grid, certify_trace, descent_lemma, inertial_residual, CertificateName, CertificateReport,
    EnergyContext, Prop2Params, IDENTITY_RTOL,
};
use proxcert::harness::{
    fit_default, fit_linear_rate, generate_suite, with_reference, ProblemSpec, Window,
};
use proxcert::problems::{
    quadratic_problem, CompositeProblem, ProxOracle, Regularizer,
};
use proxcert::solvers::{gradient_mapping, run, IterationRecord, SolverConfig, Variant};
use proxcert::{Matrix, Vector};

const SEED: u64 = 2024;
const REFERENCE_BUDGET: usize = 400_000;

struct Member {
    label: String,
    problem: CompositeProblem,
    x0: Vector,
}

impl Member {
    fn strongly_convex(&self) -> bool {
        self.problem.strong_convexity() > 0.0
    }

    fn half_step(&self) -> f64 {
        0.5 / self.problem.lipschitz()
    }

    fn mapm(&self, step: f64, iters: usize) -> Vec<IterationRecord> {
        let cfg = SolverConfig::new(Variant::Mapm, step).alpha(3.0).max_iters(iters);
        run(&self.problem, &cfg, self.x0.clone()).expect("suite run")
    }

    fn ctx(&self, step: f64) -> EnergyContext {
        EnergyContext::from_problem(&self.problem, 3.0, step).expect("reference attached")
    }
}

struct Fixture {
    members: Vec<Member>,
    /// mapm, α = 3, s = 1/(2L), 1000 iterations; with the time they took.
    short: Vec<Vec<IterationRecord>>,
    short_time: Duration,
    /// Same configuration, 2000 iterations.
    long: Vec<Vec<IterationRecord>>,
}

impl Fixture {
    fn build() -> Fixture {
        let suite = generate_suite(SEED);
        let members: Vec<Member> = std::thread::scope(|scope| {
            let handles: Vec<_> = suite
                .iter()
                .map(|sp| {
                    scope.spawn(move || {
                        let (problem, _) = with_reference(&sp.problem, REFERENCE_BUDGET)
                            .unwrap_or_else(|e| panic!("reference for {}: {e}", sp.label()));
                        Member {
                            label: sp.label(),
                            problem,
                            x0: sp.x0.clone(),
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });

        let start = Instant::now();
        let short: Vec<_> = members.iter().map(|m| m.mapm(m.half_step(), 1000)).collect();
        let short_time = start.elapsed();
        let long = std::thread::scope(|scope| {
            let handles: Vec<_> = members
                .iter()
                .map(|m| scope.spawn(move || m.mapm(m.half_step(), 2000)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        Fixture {
            members,
            short,
            short_time,
            long,
        }
    }

    fn strongly_convex(&self) -> impl Iterator<Item = (&Member, &Vec<IterationRecord>, &Vec<IterationRecord>)> {
        self.members
            .iter()
            .zip(&self.short)
            .zip(&self.long)
            .filter(|((m, _), _)| m.strongly_convex())
            .map(|((m, s), l)| (m, s, l))
    }
}

type Verdict = Result<String, String>;

fn worst(reports: impl IntoIterator<Item = CertificateReport>) -> (usize, usize, Option<CertificateReport>) {
    let mut count = 0;
    let mut violations = 0;
    let mut first = None;
    for r in reports {
        count += 1;
        if !r.pass {
            violations += 1;
            first.get_or_insert(r);
        }
    }
    (count, violations, first)
}

fn certify_named(member: &Member, records: &[IterationRecord], step: f64, name: CertificateName) -> Vec<CertificateReport> {
    let cert = certify_trace(&member.problem, &member.ctx(step), Variant::Mapm, records).expect("certify");
    cert.reports.into_iter().filter(|r| r.name == name).collect()
}

fn tally(name: CertificateName, items: Vec<(String, Vec<CertificateReport>)>) -> Verdict {
    let mut total = 0;
    let mut failures = Vec::new();
    for (label, reports) in items {
        let (count, violations, first) = worst(reports);
        total += count;
        if violations > 0 {
            let r = first.unwrap();
            failures.push(format!(
                "{label}: {violations} violations, first at k = {} (lhs {:e}, rhs {:e})",
                r.k, r.lhs, r.rhs
            ));
        }
    }
    if total == 0 {
        return Err(format!("no {name} checks were evaluated"));
    }
    if failures.is_empty() {
        Ok(format!("{total} {name} checks, 0 violations"))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_1(fx: &Fixture) -> Verdict {
    let mut bad = Vec::new();
    for (m, trace) in fx.members.iter().zip(&fx.short) {
        if let Some(w) = trace.windows(2).find(|w| w[1].f_y > w[0].f_y) {
            bad.push(format!("{} increases at k = {}", m.label, w[1].k));
        }
    }
    if fx.members.len() < 20 {
        bad.push(format!("suite has only {} problems", fx.members.len()));
    }
    if fx.short_time >= Duration::from_secs(30) {
        bad.push(format!("runs took {:?}", fx.short_time));
    }
    if bad.is_empty() {
        Ok(format!(
            "{} problems x 1000 iterations, nonincreasing, {:.2?}",
            fx.members.len(),
            fx.short_time
        ))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_2(fx: &Fixture) -> Verdict {
    tally(
        CertificateName::EnergyNonincreasing,
        fx.strongly_convex()
            .map(|(m, short, _)| {
                (m.label.clone(), certify_named(m, short, m.half_step(), CertificateName::EnergyNonincreasing))
            })
            .collect(),
    )
}

fn criterion_3(fx: &Fixture) -> Verdict {
    let half = tally(
        CertificateName::Prop1,
        fx.strongly_convex()
            .map(|(m, short, _)| (m.label.clone(), certify_named(m, short, m.half_step(), CertificateName::Prop1)))
            .collect(),
    )?;
    let full = tally(
        CertificateName::Prop1,
        fx.strongly_convex()
            .map(|(m, _, _)| {
                let s = 1.0 / m.problem.lipschitz();
                let trace = m.mapm(s, 1000);
                (format!("{} at s = 1/L", m.label), certify_named(m, &trace, s, CertificateName::Prop1))
            })
            .collect(),
    )?;
    Ok(format!("s = 1/(2L): {half}; s = 1/L: {full}"))
}

fn criterion_4(fx: &Fixture) -> Verdict {
    let grid = Prop2Params::grid(&[0.25, 0.5, 1.0, 2.0]);
    tally(
        CertificateName::Prop2,
        fx.strongly_convex()
            .map(|(m, short, _)| {
                let reports = certify_prop2_grid(&m.problem, &m.ctx(m.half_step()), short, &grid)
                    .expect("prop2 grid")
                    .into_iter()
                    .map(|(_, r)| r)
                    .collect();
                (m.label.clone(), reports)
            })
            .collect(),
    )
}

/// `(α−1)²‖x_0−x*‖²/(2sk(k+α−1))` at `α = 3`.
fn sublinear_envelope(s: f64, k: usize, dist0: f64) -> f64 {
    let k = k as f64;
    4.0 * dist0 * dist0 / (2.0 * s * k * (k + 2.0))
}

fn criterion_5(fx: &Fixture) -> Verdict {
    let mut items = Vec::new();
    for (m, _, long) in fx.strongly_convex() {
        let (l, mu) = (m.problem.lipschitz(), m.problem.strong_convexity());
        let s = m.half_step();
        let rho = mu / (4.0 * l + 5.0 * mu);
        let x_star = m.problem.known_minimizer().unwrap();
        let f_star = m.problem.known_optimum().unwrap();
        let dist0 = (&m.x0 - x_star).norm();
        // A run ends early only at an exact zero of the gradient mapping.
        let last = (long.len() - 1).min(2000);
        let reports = (2..=last)
            .map(|k| {
                let env = sublinear_envelope(s, k, dist0) * (1.0 + rho).powi(2 - k as i32);
                CertificateReport::inequality(k, CertificateName::Theorem1Envelope, long[k].f_y - f_star, env)
            })
            .collect();
        items.push((m.label.clone(), reports));
    }
    tally(CertificateName::Theorem1Envelope, items)
}

fn criterion_6(fx: &Fixture) -> Verdict {
    let mut items = Vec::new();
    for (m, long) in fx.members.iter().zip(&fx.long) {
        if m.strongly_convex() {
            continue;
        }
        let s = m.half_step();
        let x_star = m.problem.known_minimizer().unwrap();
        let f_star = m.problem.known_optimum().unwrap();
        let dist0 = (&m.x0 - x_star).norm();
        let last = (long.len() - 1).min(2000);
        let reports = (1..=last)
            .map(|k| {
                CertificateReport::inequality(
                    k,
                    CertificateName::Theorem2Envelope,
                    long[k].f_y - f_star,
                    sublinear_envelope(s, k, dist0),
                )
            })
            .collect();
        items.push((m.label.clone(), reports));
    }
    if items.len() < 2 {
        return Err(format!("expected the two wide lassos, found {}", items.len()));
    }
    tally(CertificateName::Theorem2Envelope, items)
}

fn criterion_7() -> Verdict {
    // With α = 3 the momentum k/(k+3) passes the critical damping of every
    // mode within a handful of steps, after which F(y_k) oscillates and
    // mapm starts rejecting. A large α keeps k/(k+α) ≤ 1/7 for k ≤ 500,
    // below the critical value 3 − 2√2 of every mode at s = 1/(2L), so each
    // mode decays without sign changes and every step is accepted.
    let spec = ProblemSpec::quadratic(20, 1.2, SEED);
    let problem = spec.build().map_err(|e| e.to_string())?;
    let x0 = spec.initial_point();
    let s = 0.5 / problem.lipschitz();
    let alpha = 3000.0;
    let cfg = |v| SolverConfig::new(v, s).alpha(alpha).max_iters(500);
    let mapm = run(&problem, &cfg(Variant::Mapm), x0.clone()).unwrap();
    let apm = run(&problem, &cfg(Variant::Apm), x0).unwrap();
    if let Some(r) = mapm.iter().find(|r| r.accepted == Some(false)) {
        return Err(format!("acceptance test failed at k = {}; instance unsuitable", r.k));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in mapm.iter().zip(&apm) {
        let scale = b.x.norm().max(b.y.norm()).max(f64::MIN_POSITIVE);
        let rel = ((&a.x - &b.x).norm().max((&a.y - &b.y).norm())) / scale;
        worst = worst.max(rel);
    }
    if mapm.len() == 501 && apm.len() == 501 && worst <= 1e-12 {
        Ok(format!(
            "alpha = {alpha}, 501 iterates, every step accepted, max relative difference {worst:e}"
        ))
    } else {
        Err(format!("max relative difference {worst:e} over {} iterates", mapm.len()))
    }
}

fn criterion_8(fx: &Fixture) -> Verdict {
    let mut checks = 0;
    let mut bad = Vec::new();
    let mut largest: f64 = 0.0;
    for (m, trace) in fx.members.iter().zip(&fx.short) {
        let s = m.half_step();
        for w in trace.windows(2) {
            let (r, next) = (&w[0], &w[1]);
            let g = gradient_mapping(&m.problem, s, &r.x).g;
            let res = inertial_residual(3.0, s, r.k, (&r.x, &r.y), (&next.x, &next.y), &g).norm();
            let scaled = res / (1.0 + r.x.norm());
            largest = largest.max(scaled);
            checks += 1;
            if scaled > IDENTITY_RTOL {
                bad.push(format!("{} at k = {}: residual {res:e}", m.label, r.k));
                break;
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{checks} transitions, max residual/(1+|x_k|) = {largest:e}"))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_9() -> Verdict {
    let p = quadratic_problem(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
    let (lhs, rhs) = descent_lemma(&p, 1.0, &Vector::from_element(1, 1.0), &Vector::zeros(1));
    let slack = rhs - lhs;
    if slack.abs() <= 1e-12 {
        Ok(format!("lhs {lhs}, rhs {rhs}, slack {slack:e}"))
    } else {
        Err(format!("slack {slack:e}"))
    }
}

fn criterion_10(fx: &Fixture) -> Verdict {
    let gaps: Vec<f64> = (0..300).map(|k| 3.0 * 1.25f64.powi(-k)).collect();
    let fit = fit_linear_rate(&gaps, Window::new(0, gaps.len())).map_err(|e| e.to_string())?;
    let rel = (fit.rho_hat - 0.25).abs() / 0.25;
    if rel > 1e-10 {
        return Err(format!("geometric fit off by {rel:e} relative"));
    }
    let mut bad = Vec::new();
    let mut tightest = f64::INFINITY;
    let mut fitted = 0;
    for (m, _, long) in fx.strongly_convex() {
        let f_star = m.problem.known_optimum().unwrap();
        let gaps: Vec<f64> = long.iter().map(|r| r.f_y - f_star).collect();
        let ctx = m.ctx(m.half_step());
        let bound = proxcert::certificates::rho_lower_bound(&ctx);
        match fit_default(&gaps, f_star) {
            Ok(f) => {
                fitted += 1;
                tightest = tightest.min(f.rho_hat - bound);
                if f.rho_hat < bound - 1e-6 {
                    bad.push(format!("{}: rho_hat {} < bound {bound}", m.label, f.rho_hat));
                }
            }
            Err(e) => bad.push(format!("{}: {e}", m.label)),
        }
    }
    if bad.is_empty() {
        Ok(format!(
            "geometric factor to {rel:e}; {fitted} suite fits, min(rho_hat - bound) = {tightest:e}"
        ))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_11() -> Verdict {
    let spec = ProblemSpec::quadratic(20, 100.0, SEED);
    let problem = spec.build().map_err(|e| e.to_string())?;
    let (problem, _) = with_reference(&problem, REFERENCE_BUDGET).map_err(|e| e.to_string())?;
    let ratio = problem.strong_convexity() / problem.lipschitz();
    if (ratio - 0.01).abs() > 1e-9 {
        return Err(format!("mu/L = {ratio}"));
    }
    let f_star = problem.known_optimum().unwrap();
    let x0 = spec.initial_point();
    let fit = |variant: Variant, s: f64| {
        let trace = run(&problem, &SolverConfig::new(variant, s).max_iters(2000), x0.clone()).unwrap();
        let gaps: Vec<f64> = trace.iter().map(|r| r.f_y - f_star).collect();
        fit_default(&gaps, f_star)
    };
    let l = problem.lipschitz();
    let known = fit(Variant::StronglyConvexApm, 1.0 / l).map_err(|e| e.to_string())?;
    let mapm = fit(Variant::Mapm, 0.5 / l).map_err(|e| e.to_string())?;
    let msg = format!(
        "strongly_convex_apm rho_hat {:.5} (r2 {:.3}) vs mapm rho_hat {:.5} (r2 {:.3})",
        known.rho_hat, known.r_squared, mapm.rho_hat, mapm.r_squared
    );
    if known.rho_hat >= mapm.rho_hat {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn criterion_12() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut counts = Vec::new();
    for kind in ["zero", "l1", "box", "squared_l2"] {
        let mut nonexp = 0;
        let mut optimal = 0;
        for case in 0..1000 {
            let n = rng.random_range(1..=8);
            let reg = match kind {
                "zero" => Regularizer::Zero,
                "l1" => Regularizer::l1(rng.random_range(0.01..5.0)).unwrap(),
                "squared_l2" => Regularizer::squared_l2(rng.random_range(0.01..5.0)).unwrap(),
                _ => {
                    let lo = random_vector(&mut rng, n, 2.0);
                    let width = Vector::from_fn(n, |_, _| rng.random_range(0.0..3.0));
                    Regularizer::boxed(lo.clone(), lo + width).unwrap()
                }
            };
            let t = rng.random_range(0.01..4.0);
            let u = random_vector(&mut rng, n, 5.0);
            let v = random_vector(&mut rng, n, 5.0);
            let (pu, pv) = (reg.prox(&u, t), reg.prox(&v, t));
            if (&pu - &pv).norm() <= (&u - &v).norm() * (1.0 + 1e-12) + 1e-15 {
                nonexp += 1;
            } else {
                return Err(format!("{kind} case {case}: not nonexpansive"));
            }
            // p = prox_{tg}(u) iff ⟨u − p, w − p⟩ ≤ t(g(w) − g(p)) for all w.
            let gp = reg.value(&pu);
            for probe in 0..100 {
                let mut w = random_vector(&mut rng, n, 6.0);
                if let Regularizer::Box { lo, hi } = &reg {
                    w = w.zip_zip_map(lo, hi, |c, l, h| c.clamp(l, h));
                }
                let lhs = (&u - &pu).dot(&(&w - &pu));
                let rhs = t * (reg.value(&w) - gp);
                if lhs > rhs + 1e-10 * (1.0 + lhs.abs() + rhs.abs()) {
                    return Err(format!("{kind} case {case} probe {probe}: {lhs} > {rhs}"));
                }
            }
            optimal += 1;
        }
        counts.push(format!("{kind} {nonexp}/{optimal}"));
    }
    Ok(format!("nonexpansive/optimal cases: {}", counts.join(", ")))
}

#[test]
fn acceptance_criteria() {
    let start = Instant::now();
    let fx = Fixture::build();
    // Written straight to stdout so the verdicts show up without --nocapture.
    let mut out = std::io::stdout().lock();
    writeln!(out, "fixture: {} suite problems with references in {:.2?}", fx.members.len(), start.elapsed()).unwrap();

    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        (1, "monotone objective on the full suite", Box::new(|| criterion_1(&fx))),
        (2, "energy nonincreasing", Box::new(|| criterion_2(&fx))),
        (3, "per-iteration decrement bound", Box::new(|| criterion_3(&fx))),
        (4, "energy upper bound over the parameter grid", Box::new(|| criterion_4(&fx))),
        (5, "linear envelope with rho = mu/(4L+5mu)", Box::new(|| criterion_5(&fx))),
        (6, "sublinear envelope on mu = 0 problems", Box::new(|| criterion_6(&fx))),
        (7, "monotone and plain iterates coincide when every step is accepted", Box::new(criterion_7)),
        (8, "inertial identity", Box::new(|| criterion_8(&fx))),
        (9, "descent inequality equality case", Box::new(criterion_9)),
        (10, "rate fit recovery and empirical rate above the certified bound", Box::new(|| criterion_10(&fx))),
        (11, "known-mu momentum fits a faster rate", Box::new(criterion_11)),
        (12, "prox nonexpansiveness and optimality", Box::new(criterion_12)),
    ];
    let mut failed = Vec::new();
    for (n, title, check) in &criteria {
        match check() {
            Ok(detail) => writeln!(out, "criterion {n:>2} PASS  {title}: {detail}").unwrap(),
            Err(detail) => {
                writeln!(out, "criterion {n:>2} FAIL  {title}: {detail}").unwrap();
                failed.push(*n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

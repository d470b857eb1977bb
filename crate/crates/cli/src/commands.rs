use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use proxcert::certificates::{certify_prop2_grid, certify_trace, CertificateName, EnergyContext, Prop2Params};
use proxcert::harness::{compare_solvers, reference_solution, Comparison};
use proxcert::problems::CompositeProblem;
use proxcert::solvers::{run as run_solver, Variant};
use proxcert::trace::{read_trace, report_rows, write_report, write_trace, Format, ReportRow, Trace, TraceMeta};

use crate::spec::{parse_compare_spec, problem_spec, solver_config};
use crate::{CertifyArgs, CompareArgs, Failure, ProblemArgs, RunArgs};

/// Grid of the energy upper bound's free parameters swept by `--prop2-sweep`.
const PROP2_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Attaches a reference solution, or explains on stderr why none is used.
fn try_reference(problem: &CompositeProblem, budget: usize) -> Result<CompositeProblem, Failure> {
    match reference_solution(problem, budget) {
        Ok(r) => Ok(r.attach(problem)?),
        Err(proxcert::Error::ReferenceUnavailable(msg)) => {
            eprintln!("proxcert: no reference solution ({msg}); gap and energy columns left empty");
            Ok(problem.clone())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let format: Format = args.format.parse()?;
    let spec = problem_spec(&args.problem)?;
    let bare = spec.build()?;
    let cfg = solver_config(&args.solver, &bare)?.record_certificates(true);
    let problem = try_reference(&bare, args.reference_budget)?;
    let records = run_solver(&problem, &cfg, spec.initial_point())?;
    let trace = Trace {
        meta: TraceMeta {
            problem_hash: problem.content_hash(),
            problem: spec,
            solver: cfg.variant,
            alpha: cfg.alpha,
            step: cfg.step,
            max_iters: cfg.max_iters,
            grad_map_tol: cfg.grad_map_tol,
            f_star: problem.known_optimum(),
            iterates: args.record_iterates,
        },
        records,
    };
    let mut out = open_output(args.output.as_deref())?;
    write_trace(&mut out, &trace, format)?;
    out.flush()?;
    Ok(())
}

pub fn certify(args: CertifyArgs) -> Result<(), Failure> {
    let format: Format = args.format.parse()?;
    let file = File::open(&args.trace)
        .map_err(|e| Failure::Config(format!("cannot open {}: {e}", args.trace.display())))?;
    let trace = read_trace(BufReader::new(file))?;
    if !trace.meta.iterates {
        return Err(Failure::Config(
            "trace has no stored iterates; rerun with --record-iterates".into(),
        ));
    }

    let mut spec = trace.meta.problem.clone();
    if let Some(kind) = &args.problem {
        spec.kind = kind.parse()?;
    }
    spec.dim = args.dim.unwrap_or(spec.dim);
    spec.rows = args.rows.unwrap_or(spec.rows);
    spec.cond = args.cond.unwrap_or(spec.cond);
    spec.lam = args.lam.unwrap_or(spec.lam);
    spec.seed = args.seed.unwrap_or(spec.seed);
    let problem = spec.build()?;
    if problem.content_hash() != trace.meta.problem_hash {
        return Err(Failure::Config(
            "problem does not match the trace (content hash mismatch)".into(),
        ));
    }

    let reference = reference_solution(&problem, args.reference_budget)?;
    let problem = reference.attach(&problem)?;
    let variant = trace.meta.solver;
    // The energy needs α ≥ 3; variants without α only get the α-free checks.
    let alpha = if variant.uses_alpha() { trace.meta.alpha } else { 3.0 };
    let mut ctx = EnergyContext::from_problem(&problem, alpha, trace.meta.step)?;
    if let Some(shift) = args.f_star_shift {
        let shifted = ctx.f_star + shift;
        ctx = ctx.with_f_star(shifted);
    }

    let mut cert = certify_trace(&problem, &ctx, variant, &trace.records)?;
    if args.prop2_sweep && variant == Variant::Mapm {
        let grid = Prop2Params::grid(&PROP2_GRID);
        let extra = certify_prop2_grid(&problem, &ctx, &trace.records, &grid)?;
        cert.reports.extend(extra.into_iter().map(|(_, r)| r));
        cert.reports.sort_by_key(|r| (r.k, r.name));
    }

    let rows = report_rows(&cert);
    let mut out = open_output(args.output.as_deref())?;
    write_report(&mut out, &rows, format)?;
    out.flush()?;

    for row in &rows {
        if let ReportRow::NotApplicable { name, reason } = row {
            eprintln!("proxcert: {name} not applicable: {reason}");
        }
    }
    let checked = cert.reports.len();
    match cert.first_violation() {
        Some(v) => Err(Failure::Violation(format!(
            "certificate violated: first at k = {}, name = {} (lhs {:e}, rhs {:e}, slack {:e}); {} of {checked} checks failed",
            v.k,
            v.name,
            v.lhs,
            v.rhs,
            v.slack,
            cert.violations().count()
        ))),
        None => {
            eprintln!(
                "proxcert: all {checked} checks passed ({} descent, {} energy)",
                cert.count(CertificateName::DescentLemma),
                cert.count(CertificateName::EnergyNonincreasing)
            );
            Ok(())
        }
    }
}

fn float_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(v.to_string())
    }
}

fn write_table(out: &mut dyn Write, cmp: &Comparison, labels: &[String], format: Format) -> Result<(), Failure> {
    match format {
        Format::Csv => {
            writeln!(out, "# proxcert-compare v1")?;
            writeln!(out, "k,{}", labels.join(","))?;
            for k in 0..cmp.rows() {
                let cells: Vec<String> = cmp
                    .row(k)
                    .into_iter()
                    .map(|g| g.map_or(String::new(), |g| g.to_string()))
                    .collect();
                writeln!(out, "{k},{}", cells.join(","))?;
            }
        }
        Format::JsonLines => {
            for k in 0..cmp.rows() {
                let mut gaps = Map::new();
                for (label, g) in labels.iter().zip(cmp.row(k)) {
                    gaps.insert(label.clone(), g.map_or(Value::Null, float_value));
                }
                let row = json!({ "schema_version": 1, "kind": "gap_row", "k": k, "gap": gaps });
                writeln!(out, "{row}")?;
            }
        }
    }
    Ok(())
}

fn unique_labels(raw: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    for label in raw {
        let mut candidate = label.clone();
        let mut n = 2;
        while out.contains(&candidate) {
            candidate = format!("{label}#{n}");
            n += 1;
        }
        out.push(candidate);
    }
    out
}

fn same_problem(a: &ProblemArgs, b: &ProblemArgs) -> bool {
    a.problem == b.problem
        && a.dim == b.dim
        && a.rows == b.rows
        && a.cond.to_bits() == b.cond.to_bits()
        && a.lam.to_bits() == b.lam.to_bits()
        && a.seed == b.seed
}

pub fn compare(args: CompareArgs) -> Result<(), Failure> {
    let format: Format = args.format.parse()?;
    if args.specs.len() < 2 {
        return Err(Failure::Config(format!(
            "compare needs at least 2 --spec entries, got {}",
            args.specs.len()
        )));
    }
    let specs = args
        .specs
        .iter()
        .map(|s| parse_compare_spec(s, &args.problem))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(other) = specs.iter().find(|s| !same_problem(&s.problem, &args.problem)) {
        return Err(Failure::Config(format!(
            "--spec '{}' names a different problem; all specs must share one problem",
            other.label
        )));
    }
    let spec = problem_spec(&args.problem)?;
    let bare = spec.build()?;
    let configs = specs
        .iter()
        .map(|s| solver_config(&s.solver, &bare))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = unique_labels(specs.into_iter().map(|s| s.label).collect());

    let reference = reference_solution(&bare, args.reference_budget)?;
    let problem = reference.attach(&bare)?;
    let pairs: Vec<_> = labels.iter().cloned().zip(configs).collect();
    let cmp = compare_solvers(&problem, &pairs, &spec.initial_point())?;

    let mut out = open_output(args.output.as_deref())?;
    write_table(&mut *out, &cmp, &labels, format)?;
    out.flush()?;

    let mut summary = serde_json::to_value(cmp.summary()).map_err(|e| Failure::Config(e.to_string()))?;
    if let Value::Object(obj) = &mut summary {
        obj.insert("schema_version".into(), json!(1));
        obj.insert("problem".into(), json!(spec.label()));
        obj.insert("problem_hash".into(), json!(problem.content_hash()));
    }
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Config(e.to_string()))?;
    let summary_path = args.summary.clone().or_else(|| {
        args.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".summary.json");
            PathBuf::from(s)
        })
    });
    match summary_path {
        Some(p) => std::fs::write(&p, text + "\n")
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

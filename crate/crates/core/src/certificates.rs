//! Numerical certificates for the monotone accelerated proximal gradient
//! method.
//!
//! The rate analysis tracks the energy
//!
//! ```text
//! E_k = ½‖φ_k‖² + θ_k (F(y_k) − F*),
//! φ_k = k(x_k − y_k) + (α−1)(x_k − x*),   θ_k = k(k+α−1)s,
//! ```
//!
//! and bounds both its decrease `E_{k+1} − E_k` and its size `E_{k+1}` by
//! weighted sums of the same three squared norms
//! `‖x_k − y_k‖²`, `‖x_k − x*‖²`, `‖sG_s(x_k)‖²`. Comparing the two weight
//! triples gives the contraction `(1+ρ)E_{k+1} ≤ E_k`. Every one of these
//! steps is re-evaluated here on a concrete trace and reported with its
//! slack.
//!
//! Tolerances: inequalities pass when `rhs − lhs ≥ −1e-8·(1 + |lhs| + |rhs|)`,
//! the inertial identity when its residual is at most `1e-10·(1 + ‖x_k‖)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::problems::CompositeProblem;
use crate::solvers::{gradient_mapping, GradientMapping, IterationRecord, Variant};
use crate::{Error, Result, Vector};

pub const INEQUALITY_RTOL: f64 = 1e-8;
pub const IDENTITY_RTOL: f64 = 1e-10;
/// A gap below `−GAP_FLOOR_RTOL·(1 + |F*|)` means `F*` is wrong.
pub const GAP_FLOOR_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateName {
    EnergyNonincreasing,
    Prop1,
    Prop2,
    DescentLemma,
    InertialIdentity,
    Theorem1Envelope,
    Theorem2Envelope,
}

impl CertificateName {
    pub const ALL: [CertificateName; 7] = [
        CertificateName::EnergyNonincreasing,
        CertificateName::Prop1,
        CertificateName::Prop2,
        CertificateName::DescentLemma,
        CertificateName::InertialIdentity,
        CertificateName::Theorem1Envelope,
        CertificateName::Theorem2Envelope,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateName::EnergyNonincreasing => "energy_nonincreasing",
            CertificateName::Prop1 => "prop1",
            CertificateName::Prop2 => "prop2",
            CertificateName::DescentLemma => "descent_lemma",
            CertificateName::InertialIdentity => "inertial_identity",
            CertificateName::Theorem1Envelope => "theorem1_envelope",
            CertificateName::Theorem2Envelope => "theorem2_envelope",
        }
    }
}

impl fmt::Display for CertificateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertificateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CertificateName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown certificate name '{s}'")))
    }
}

/// Constants the energy and the envelopes depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyContext {
    pub alpha: f64,
    pub s: f64,
    pub mu: f64,
    pub lipschitz: f64,
    pub x_star: Vector,
    pub f_star: f64,
    problem_hash: Option<String>,
}

impl EnergyContext {
    pub fn new(alpha: f64, s: f64, mu: f64, lipschitz: f64, x_star: Vector, f_star: f64) -> Result<Self> {
        if !(alpha >= 3.0 && alpha.is_finite()) {
            return Err(Error::RejectedConfig(format!("energy needs alpha >= 3, got {alpha}")));
        }
        if !(s > 0.0 && s.is_finite() && s <= 1.0 / lipschitz) {
            return Err(Error::RejectedConfig(format!(
                "energy needs 0 < s <= 1/L, got s = {s}, L = {lipschitz}"
            )));
        }
        if !(mu >= 0.0 && lipschitz >= mu) {
            return Err(Error::RejectedConfig(format!(
                "need L >= mu >= 0, got L = {lipschitz}, mu = {mu}"
            )));
        }
        if !f_star.is_finite() {
            return Err(Error::RejectedConfig(format!("F* must be finite, got {f_star}")));
        }
        crate::ensure_finite(&x_star, "x*")?;
        Ok(Self {
            alpha,
            s,
            mu,
            lipschitz,
            x_star,
            f_star,
            problem_hash: None,
        })
    }

    /// Reads `μ`, `L`, `x*`, `F*` from a problem that carries a known
    /// solution, and binds the context to that problem's content hash.
    pub fn from_problem(problem: &CompositeProblem, alpha: f64, s: f64) -> Result<Self> {
        let (x_star, f_star) = match (problem.known_minimizer(), problem.known_optimum()) {
            (Some(x), Some(f)) => (x.clone(), f),
            _ => {
                return Err(Error::ReferenceUnavailable(
                    "problem has no known minimizer/optimum".into(),
                ))
            }
        };
        let mut ctx = Self::new(alpha, s, problem.strong_convexity(), problem.lipschitz(), x_star, f_star)?;
        ctx.problem_hash = Some(problem.content_hash());
        Ok(ctx)
    }

    pub fn problem_hash(&self) -> Option<&str> {
        self.problem_hash.as_deref()
    }

    /// Same context with `F*` shifted; used for fault injection.
    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = f_star;
        self
    }
}

/// `φ_k = k(x_k − y_k) + (α−1)(x_k − x*)`.
pub fn phi(ctx: &EnergyContext, k: usize, x: &Vector, y: &Vector) -> Vector {
    (x - y) * (k as f64) + (x - &ctx.x_star) * (ctx.alpha - 1.0)
}

/// `θ_k = k(k+α−1)s`.
pub fn theta(ctx: &EnergyContext, k: usize) -> f64 {
    let k = k as f64;
    k * (k + ctx.alpha - 1.0) * ctx.s
}

/// `E_k = ½‖φ_k‖² + θ_k(F(y_k) − F*)`.
///
/// Gaps down to `−1e-9·(1 + |F*|)` are treated as rounding and clamped to
/// zero; anything lower is reported as corruption of `F*`.
pub fn energy(ctx: &EnergyContext, k: usize, x: &Vector, y: &Vector, f_y: f64) -> Result<f64> {
    let gap = checked_gap(ctx, f_y)?;
    let th = theta(ctx, k);
    // θ_0 = 0 and F(y_0) may be +∞ for an infeasible start.
    let weighted = if th == 0.0 { 0.0 } else { th * gap };
    Ok(0.5 * phi(ctx, k, x, y).norm_squared() + weighted)
}

fn checked_gap(ctx: &EnergyContext, f_y: f64) -> Result<f64> {
    let gap = f_y - ctx.f_star;
    if gap.is_nan() {
        return Err(Error::DataCorruption(format!("F(y) = {f_y} is not a number")));
    }
    if gap < -GAP_FLOOR_RTOL * (1.0 + ctx.f_star.abs()) {
        return Err(Error::DataCorruption(format!(
            "F(y) = {f_y} lies below the reference optimum F* = {} by {:e}",
            ctx.f_star, -gap
        )));
    }
    Ok(gap.max(0.0))
}

/// Weights of the three squared norms `(‖x_k−y_k‖², ‖x_k−x*‖², ‖sG‖²)` in
/// the decrement bound, all nonnegative.
pub fn prop1_weights(ctx: &EnergyContext, k: usize) -> [f64; 3] {
    let (a, s, mu) = (ctx.alpha, ctx.s, ctx.mu);
    let k = k as f64;
    let kk = k + a - 1.0;
    [
        mu * s * k * kk / 2.0,
        mu * s * (a - 1.0) * kk / 2.0,
        (1.0 - s * ctx.lipschitz) * kk * kk / 2.0,
    ]
}

/// Upper bound on `E_{k+1} − E_k` (nonpositive):
/// `−((1−sL)(k+α−1)²/2)‖sG‖² − (μsk(k+α−1)/2)‖x_k−y_k‖² − (μs(α−1)(k+α−1)/2)‖x_k−x*‖²`.
pub fn prop1_rhs(ctx: &EnergyContext, k: usize, x: &Vector, y: &Vector, g: &Vector) -> f64 {
    let w = squared_norms(ctx, x, y, g);
    let a = prop1_weights(ctx, k);
    -(a[0] * w[0] + a[1] * w[1] + a[2] * w[2])
}

/// Free parameters `ω, λ, σ > 0` of the energy upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Params {
    pub omega: f64,
    pub lambda: f64,
    pub sigma: f64,
}

impl Default for Prop2Params {
    /// `ω = λ = ½`, `σ = 1`, the instantiation behind the closed-form ρ.
    fn default() -> Self {
        Self {
            omega: 0.5,
            lambda: 0.5,
            sigma: 1.0,
        }
    }
}

impl Prop2Params {
    /// Cartesian cube `values³`.
    pub fn grid(values: &[f64]) -> Vec<Prop2Params> {
        let mut out = Vec::with_capacity(values.len().pow(3));
        for &omega in values {
            for &lambda in values {
                for &sigma in values {
                    out.push(Prop2Params { omega, lambda, sigma });
                }
            }
        }
        out
    }
}

/// Weights of the three squared norms in the bound on `E_{k+1}`; `None`
/// when `μ = 0` (the bound divides by `μs`).
pub fn prop2_weights(ctx: &EnergyContext, k: usize, p: Prop2Params) -> Option<[f64; 3]> {
    if ctx.mu <= 0.0 {
        return None;
    }
    let (a, s, mu, l) = (ctx.alpha, ctx.s, ctx.mu, ctx.lipschitz);
    let k = k as f64;
    let kk = k + a - 1.0;
    Some([
        k * k / 2.0 * (1.0 + p.omega + p.lambda),
        (a - 1.0).powi(2) / 2.0 * (1.0 + 1.0 / p.omega + 1.0 / p.sigma),
        kk * kk / 2.0 * (1.0 + 1.0 / p.lambda + p.sigma + (1.0 - mu * s * (2.0 - s * l)) / (mu * s)),
    ])
}

/// Upper bound on `E_{k+1}`, or `None` when `μ = 0`.
pub fn prop2_rhs(ctx: &EnergyContext, k: usize, x: &Vector, y: &Vector, g: &Vector, p: Prop2Params) -> Option<f64> {
    let b = prop2_weights(ctx, k, p)?;
    let w = squared_norms(ctx, x, y, g);
    Some(b[0] * w[0] + b[1] * w[1] + b[2] * w[2])
}

fn squared_norms(ctx: &EnergyContext, x: &Vector, y: &Vector, g: &Vector) -> [f64; 3] {
    [
        (x - y).norm_squared(),
        (x - &ctx.x_star).norm_squared(),
        (g * ctx.s).norm_squared(),
    ]
}

/// `min_i aᵢ/bᵢ`: if `A ≤ −Σ aᵢWᵢ` and `B ≤ Σ bᵢWᵢ` with `Wᵢ > 0` then
/// `A + ρB ≤ 0`.
pub fn comparison_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::RejectedInput(format!(
            "need equal nonempty lists, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::RejectedInput("all weights must be positive and finite".into()));
    }
    Ok(a.iter().zip(b).map(|(ai, bi)| ai / bi).fold(f64::INFINITY, f64::min))
}

/// `min{ μs(1−sL)/(1+μs(sL+2)), μs/2 }`; zero when `μ = 0` or `s = 1/L`.
pub fn rho_lower_bound(ctx: &EnergyContext) -> f64 {
    rho_lower_bound_for(ctx.mu, ctx.s, ctx.lipschitz)
}

pub fn rho_lower_bound_for(mu: f64, s: f64, lipschitz: f64) -> f64 {
    let ms = mu * s;
    let first = ms * (1.0 - s * lipschitz) / (1.0 + ms * (s * lipschitz + 2.0));
    first.min(ms / 2.0).max(0.0)
}

/// `k_α = ⌈α − 1⌉`.
pub fn k_alpha(alpha: f64) -> usize {
    (alpha - 1.0).ceil().max(0.0) as usize
}

/// Linear envelope `(α−1)²‖x_0−x*‖²/(2sk(k+α−1)) · (1+ρ)^{−k+k_α}`, defined
/// for `k ≥ k_α`.
pub fn theorem1_envelope(ctx: &EnergyContext, k: usize, dist0: f64) -> Option<f64> {
    let ka = k_alpha(ctx.alpha);
    if k < ka || k == 0 {
        return None;
    }
    let rho = rho_lower_bound(ctx);
    let exponent = -((k - ka) as f64);
    Some(sublinear(ctx, k, dist0) * (1.0 + rho).powf(exponent))
}

/// Sublinear envelope `(α−1)²‖x_0−x*‖²/(2sk(k+α−1))`, defined for `k ≥ 1`.
pub fn theorem2_envelope(ctx: &EnergyContext, k: usize, dist0: f64) -> Option<f64> {
    (k >= 1).then(|| sublinear(ctx, k, dist0))
}

fn sublinear(ctx: &EnergyContext, k: usize, dist0: f64) -> f64 {
    let kf = k as f64;
    (ctx.alpha - 1.0).powi(2) * dist0 * dist0 / (2.0 * ctx.s * kf * (kf + ctx.alpha - 1.0))
}

/// Both sides of the prox-gradient descent inequality
/// `F(x − sG_s(x)) ≤ F(y) + ⟨G_s(x), x−y⟩ − s(2−sL)/2‖G_s(x)‖² − μ/2‖x−y‖²`,
/// using the problem's own `μ` and `L`.
pub fn descent_lemma(problem: &CompositeProblem, s: f64, x: &Vector, y: &Vector) -> (f64, f64) {
    let m = gradient_mapping(problem, s, x);
    descent_sides(problem, s, problem.strong_convexity(), x, &m, y, problem.objective(y))
}

fn descent_sides(
    problem: &CompositeProblem,
    s: f64,
    mu: f64,
    x: &Vector,
    m: &GradientMapping,
    y: &Vector,
    f_y: f64,
) -> (f64, f64) {
    let lhs = problem.objective(&m.z);
    let d = x - y;
    let rhs = f_y + m.g.dot(&d) - s * (2.0 - s * problem.lipschitz()) / 2.0 * m.g.norm_squared()
        - mu / 2.0 * d.norm_squared();
    (lhs, rhs)
}

/// `(k+1)(x_{k+1}−y_{k+1}) − k(x_k−y_k) + (α−1)(x_{k+1}−x_k) + (k+α−1)sG_s(x_k)`,
/// which vanishes for both accelerated variants.
pub fn inertial_residual(alpha: f64, s: f64, k: usize, current: (&Vector, &Vector), next: (&Vector, &Vector), g: &Vector) -> Vector {
    let kf = k as f64;
    let (x, y) = current;
    let (x1, y1) = next;
    (x1 - y1) * (kf + 1.0) - (x - y) * kf + (x1 - x) * (alpha - 1.0) + g * ((kf + alpha - 1.0) * s)
}

/// One `(k, name)` verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub k: usize,
    pub name: CertificateName,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub pass: bool,
}

impl CertificateReport {
    /// `lhs ≤ rhs` up to `1e-8·(1 + |lhs| + |rhs|)`.
    pub fn inequality(k: usize, name: CertificateName, lhs: f64, rhs: f64) -> Self {
        let (slack, pass) = if rhs == f64::INFINITY {
            (f64::INFINITY, true)
        } else if lhs == f64::INFINITY || lhs.is_nan() || rhs.is_nan() {
            (f64::NEG_INFINITY, false)
        } else {
            let slack = rhs - lhs;
            let tol = INEQUALITY_RTOL * (1.0 + lhs.abs() + rhs.abs());
            (slack, slack >= -tol)
        };
        Self {
            k,
            name,
            lhs,
            rhs,
            slack,
            pass,
        }
    }

    /// Residual norm against zero with tolerance `1e-10·(1 + ‖x_k‖)`.
    pub fn identity(k: usize, residual: f64, x_norm: f64) -> Self {
        let tol = IDENTITY_RTOL * (1.0 + x_norm);
        Self {
            k,
            name: CertificateName::InertialIdentity,
            lhs: residual,
            rhs: 0.0,
            slack: -residual,
            pass: residual <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Certification {
    /// Sorted by `(k, name)`.
    pub reports: Vec<CertificateReport>,
    /// Certificates that were not evaluated, with the reason.
    pub not_applicable: Vec<(CertificateName, String)>,
}

impl Certification {
    pub fn violations(&self) -> impl Iterator<Item = &CertificateReport> {
        self.reports.iter().filter(|r| !r.pass)
    }

    pub fn first_violation(&self) -> Option<&CertificateReport> {
        self.violations().next()
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn count(&self, name: CertificateName) -> usize {
        self.reports.iter().filter(|r| r.name == name).count()
    }
}

/// Runs every applicable certificate over a recorded trace.
///
/// - `descent_lemma` runs for every variant, at `(x_k, y_k)` and `(x_k, x*)`;
///   the tighter of the two is reported.
/// - `inertial_identity` runs for apm and mapm.
/// - The energy, decrement, energy-bound and envelope certificates run for
///   mapm only. `prop2` additionally needs `μ > 0`; `theorem1_envelope`
///   needs `μ > 0`, `s < 1/L` and `k ≥ k_α`.
pub fn certify_trace(
    problem: &CompositeProblem,
    ctx: &EnergyContext,
    variant: Variant,
    records: &[IterationRecord],
) -> Result<Certification> {
    check_binding(problem, ctx, records)?;
    let mut out = Certification::default();
    let monotone = variant == Variant::Mapm;
    let inertial = variant.uses_alpha();

    if !monotone {
        for name in [
            CertificateName::EnergyNonincreasing,
            CertificateName::Prop1,
            CertificateName::Prop2,
            CertificateName::Theorem1Envelope,
            CertificateName::Theorem2Envelope,
        ] {
            out.not_applicable
                .push((name, format!("energy certificates cover mapm traces only, got {variant}")));
        }
    } else {
        if ctx.mu <= 0.0 {
            out.not_applicable
                .push((CertificateName::Prop2, "needs mu > 0".into()));
            out.not_applicable
                .push((CertificateName::Theorem1Envelope, "needs mu > 0".into()));
        } else if ctx.s * ctx.lipschitz >= 1.0 {
            out.not_applicable
                .push((CertificateName::Theorem1Envelope, "rho bound is 0 at s = 1/L".into()));
        }
    }
    if !inertial {
        out.not_applicable.push((
            CertificateName::InertialIdentity,
            format!("identity is specific to k/(k+alpha) momentum, got {variant}"),
        ));
    }

    let mappings: Vec<GradientMapping> = records
        .iter()
        .map(|r| gradient_mapping(problem, ctx.s, &r.x))
        .collect();
    let energies = if monotone {
        records
            .iter()
            .map(|r| energy(ctx, r.k, &r.x, &r.y, r.f_y))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let dist0 = (&records[0].x - &ctx.x_star).norm();
    let ka = k_alpha(ctx.alpha);
    let f_x_star = problem.objective(&ctx.x_star);

    for (i, r) in records.iter().enumerate() {
        let k = r.k;
        let m = &mappings[i];

        let (l1, r1) = descent_sides(problem, ctx.s, ctx.mu, &r.x, m, &r.y, r.f_y);
        let (l2, r2) = descent_sides(problem, ctx.s, ctx.mu, &r.x, m, &ctx.x_star, f_x_star);
        let at_y = CertificateReport::inequality(k, CertificateName::DescentLemma, l1, r1);
        let at_star = CertificateReport::inequality(k, CertificateName::DescentLemma, l2, r2);
        out.reports.push(if at_star.slack < at_y.slack { at_star } else { at_y });

        if let Some(next) = records.get(i + 1) {
            if inertial {
                let res = inertial_residual(ctx.alpha, ctx.s, k, (&r.x, &r.y), (&next.x, &next.y), &m.g);
                out.reports.push(CertificateReport::identity(k, res.norm(), r.x.norm()));
            }
            if monotone {
                let (e0, e1) = (energies[i], energies[i + 1]);
                out.reports.push(CertificateReport::inequality(
                    k,
                    CertificateName::EnergyNonincreasing,
                    e1,
                    e0,
                ));
                out.reports.push(CertificateReport::inequality(
                    k,
                    CertificateName::Prop1,
                    e1 - e0,
                    prop1_rhs(ctx, k, &r.x, &r.y, &m.g),
                ));
                if let Some(bound) = prop2_rhs(ctx, k, &r.x, &r.y, &m.g, Prop2Params::default()) {
                    out.reports
                        .push(CertificateReport::inequality(k, CertificateName::Prop2, e1, bound));
                }
            }
        }

        if monotone {
            let gap = r.f_y - ctx.f_star;
            if ctx.mu > 0.0 && ctx.s * ctx.lipschitz < 1.0 && k >= ka {
                if let Some(env) = theorem1_envelope(ctx, k, dist0) {
                    out.reports
                        .push(CertificateReport::inequality(k, CertificateName::Theorem1Envelope, gap, env));
                }
            }
            if let Some(env) = theorem2_envelope(ctx, k, dist0) {
                out.reports
                    .push(CertificateReport::inequality(k, CertificateName::Theorem2Envelope, gap, env));
            }
        }
    }
    out.reports.sort_by_key(|r| (r.k, r.name));
    Ok(out)
}

/// Evaluates the energy upper bound for every parameter triple in `params`
/// along a mapm trace. Empty when `μ = 0`.
pub fn certify_prop2_grid(
    problem: &CompositeProblem,
    ctx: &EnergyContext,
    records: &[IterationRecord],
    params: &[Prop2Params],
) -> Result<Vec<(Prop2Params, CertificateReport)>> {
    check_binding(problem, ctx, records)?;
    if ctx.mu <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(params.len() * records.len());
    for pair in records.windows(2) {
        let (r, next) = (&pair[0], &pair[1]);
        let g = gradient_mapping(problem, ctx.s, &r.x).g;
        let e1 = energy(ctx, next.k, &next.x, &next.y, next.f_y)?;
        for &p in params {
            let bound = prop2_rhs(ctx, r.k, &r.x, &r.y, &g, p).expect("mu > 0 checked above");
            out.push((p, CertificateReport::inequality(r.k, CertificateName::Prop2, e1, bound)));
        }
    }
    Ok(out)
}

/// Per-iteration contraction factor obtained by comparing the decrement and
/// energy-bound weights at the current squared norms.
///
/// Terms whose squared norm is zero drop out. Returns `None` when `μ = 0`
/// or every norm vanishes.
pub fn per_iteration_rho(ctx: &EnergyContext, k: usize, x: &Vector, y: &Vector, g: &Vector, p: Prop2Params) -> Option<f64> {
    let b = prop2_weights(ctx, k, p)?;
    let a = prop1_weights(ctx, k);
    let w = squared_norms(ctx, x, y, g);
    let active: Vec<usize> = (0..3).filter(|&i| w[i] > 0.0).collect();
    if active.is_empty() {
        return None;
    }
    if active.iter().any(|&i| a[i] <= 0.0) {
        return Some(0.0);
    }
    let a_act: Vec<f64> = active.iter().map(|&i| a[i]).collect();
    let b_act: Vec<f64> = active.iter().map(|&i| b[i]).collect();
    comparison_rho(&a_act, &b_act).ok()
}

/// `(k, ρ_k)` along a mapm trace, one per transition `k → k+1`.
pub fn empirical_rhos(
    problem: &CompositeProblem,
    ctx: &EnergyContext,
    records: &[IterationRecord],
    p: Prop2Params,
) -> Result<Vec<(usize, f64)>> {
    check_binding(problem, ctx, records)?;
    Ok(records
        .windows(2)
        .filter_map(|pair| {
            let r = &pair[0];
            let g = gradient_mapping(problem, ctx.s, &r.x).g;
            per_iteration_rho(ctx, r.k, &r.x, &r.y, &g, p).map(|rho| (r.k, rho))
        })
        .collect())
}

fn check_binding(problem: &CompositeProblem, ctx: &EnergyContext, records: &[IterationRecord]) -> Result<()> {
    if let Some(hash) = ctx.problem_hash() {
        if hash != problem.content_hash() {
            return Err(Error::RejectedConfig(
                "reference belongs to a different problem (content hash mismatch)".into(),
            ));
        }
    }
    if ctx.x_star.len() != problem.dim() {
        return Err(Error::RejectedConfig("x* dimension differs from the problem".into()));
    }
    if records.is_empty() {
        return Err(Error::Format("trace has no records".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if r.k != i {
            return Err(Error::Format(format!("record {i} has k = {}, expected consecutive k from 0", r.k)));
        }
        if r.x.len() != problem.dim() || r.y.len() != problem.dim() {
            return Err(Error::Format(format!("record {i} has iterates of the wrong dimension")));
        }
    }
    Ok(())
}

//! Gradient mapping, the four steppers and the run driver.
//!
//! Every stepper is a pure function `state -> state`. The driver evaluates
//! the gradient mapping once per iteration, records it, and hands the same
//! prox point to the stepper so the prox is never recomputed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::certificates::{self, CertificateName, EnergyContext};
use crate::problems::{CompositeProblem, ProxOracle, SmoothOracle};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Proximal gradient without extrapolation.
    Ista,
    /// Accelerated proximal gradient with momentum `k/(k+α)`.
    Apm,
    /// Monotone accelerated proximal gradient.
    Mapm,
    /// Constant momentum `(1−√(μ/L))/(1+√(μ/L))`; needs `μ > 0`.
    StronglyConvexApm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Ista,
        Variant::Apm,
        Variant::Mapm,
        Variant::StronglyConvexApm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ista => "ista",
            Variant::Apm => "apm",
            Variant::Mapm => "mapm",
            Variant::StronglyConvexApm => "strongly_convex_apm",
        }
    }

    /// Whether the variant uses the `k/(k+α)` momentum and hence `α`.
    pub fn uses_alpha(&self) -> bool {
        matches!(self, Variant::Apm | Variant::Mapm)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| {
                Error::RejectedConfig(format!(
                    "unknown solver '{s}'; valid solvers: ista, apm, mapm, strongly_convex_apm"
                ))
            })
    }
}

/// How the step size is derived from the problem's `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// `s = 1/(2L)`, the default.
    HalfInverseL,
    /// `s = 1/L`, the critical step.
    InverseL,
    Explicit(f64),
}

impl StepMode {
    /// Resolves the step and checks `0 < s ≤ 1/L`.
    pub fn resolve(&self, lipschitz: f64) -> Result<f64> {
        let s = match *self {
            StepMode::HalfInverseL => 0.5 / lipschitz,
            StepMode::InverseL => 1.0 / lipschitz,
            StepMode::Explicit(s) => s,
        };
        check_step(s, lipschitz)?;
        Ok(s)
    }
}

impl FromStr for StepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "half-inverse-L" | "half-inverse-l" => Ok(StepMode::HalfInverseL),
            "inverse-L" | "inverse-l" => Ok(StepMode::InverseL),
            other => {
                let value = other.strip_prefix("explicit:").ok_or_else(|| {
                    Error::RejectedConfig(format!(
                        "unknown step mode '{other}'; valid: half-inverse-L, inverse-L, explicit:<value>"
                    ))
                })?;
                value
                    .parse::<f64>()
                    .map(StepMode::Explicit)
                    .map_err(|e| Error::RejectedConfig(format!("bad explicit step '{value}': {e}")))
            }
        }
    }
}

fn check_step(s: f64, lipschitz: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::RejectedConfig(format!("step must be finite and > 0, got {s}")));
    }
    // Compared against the same 1/L the inverse-L mode produces, so that
    // mode is never rejected by rounding.
    if s > 1.0 / lipschitz {
        return Err(Error::RejectedConfig(format!(
            "step s = {s} exceeds 1/L = {} (L = {lipschitz})",
            1.0 / lipschitz
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Momentum parameter of apm and mapm; ignored by the other variants.
    pub alpha: f64,
    pub step: f64,
    pub max_iters: usize,
    /// Stop once `‖G_s(x_k)‖ ≤ grad_map_tol`.
    pub grad_map_tol: f64,
    pub record_certificates: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant, step: f64) -> Self {
        Self {
            variant,
            alpha: 3.0,
            step,
            max_iters: 1000,
            grad_map_tol: 0.0,
            record_certificates: false,
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn grad_map_tol(mut self, tol: f64) -> Self {
        self.grad_map_tol = tol;
        self
    }

    pub fn record_certificates(mut self, on: bool) -> Self {
        self.record_certificates = on;
        self
    }

    /// Checks the configuration against the problem it will run on.
    pub fn validate(&self, problem: &CompositeProblem) -> Result<()> {
        check_step(self.step, problem.lipschitz())?;
        if self.variant.uses_alpha() && !(self.alpha >= 3.0 && self.alpha.is_finite()) {
            return Err(Error::RejectedConfig(format!(
                "{} requires alpha >= 3, got {}",
                self.variant, self.alpha
            )));
        }
        if self.variant == Variant::StronglyConvexApm && problem.strong_convexity() <= 0.0 {
            return Err(Error::RejectedConfig(
                "strongly_convex_apm requires a positive strong convexity modulus".into(),
            ));
        }
        if !(self.grad_map_tol >= 0.0) {
            return Err(Error::RejectedConfig(format!(
                "grad_map_tol must be >= 0, got {}",
                self.grad_map_tol
            )));
        }
        Ok(())
    }
}

/// Iterates of one run. `x == y` at `k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    /// Prox point `z_{k-1}` of the step that produced this state.
    pub z: Option<Vector>,
    /// Cached `F(y_k)`.
    pub f_y: f64,
    /// mapm only: whether `y_k = z_{k-1}`.
    pub accepted: Option<bool>,
}

impl SolverState {
    pub fn initial(problem: &CompositeProblem, x0: Vector) -> Self {
        let f_y = problem.objective(&x0);
        Self {
            k: 0,
            y: x0.clone(),
            x: x0,
            z: None,
            f_y,
            accepted: None,
        }
    }
}

/// Result of one forward-backward evaluation at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMapping {
    /// `prox_{sg}(x − s∇f(x))`.
    pub z: Vector,
    /// `G_s(x) = (x − z)/s`.
    pub g: Vector,
}

pub fn gradient_mapping(problem: &CompositeProblem, s: f64, x: &Vector) -> GradientMapping {
    let forward = x - problem.smooth().gradient(x) * s;
    let z = problem.nonsmooth().prox(&forward, s);
    let g = (x - &z) / s;
    GradientMapping { z, g }
}

/// `(1−√(μ/L))/(1+√(μ/L))`.
pub fn known_mu_momentum(mu: f64, lipschitz: f64) -> f64 {
    let q = (mu / lipschitz).sqrt();
    (1.0 - q) / (1.0 + q)
}

pub fn ista_step(problem: &CompositeProblem, s: f64, state: &SolverState) -> SolverState {
    let m = gradient_mapping(problem, s, &state.x);
    ista_update(problem, state, m.z)
}

pub fn apm_step(problem: &CompositeProblem, config: &SolverConfig, state: &SolverState) -> SolverState {
    let m = gradient_mapping(problem, config.step, &state.x);
    apm_update(problem, config.alpha, state, m.z)
}

pub fn mapm_step(problem: &CompositeProblem, config: &SolverConfig, state: &SolverState) -> SolverState {
    let m = gradient_mapping(problem, config.step, &state.x);
    mapm_update(problem, config.alpha, state, m.z)
}

pub fn strongly_convex_apm_step(
    problem: &CompositeProblem,
    s: f64,
    state: &SolverState,
) -> Result<SolverState> {
    let mu = problem.strong_convexity();
    if mu <= 0.0 {
        return Err(Error::RejectedConfig(
            "strongly_convex_apm requires a positive strong convexity modulus".into(),
        ));
    }
    let m = gradient_mapping(problem, s, &state.x);
    let beta = known_mu_momentum(mu, problem.lipschitz());
    Ok(extrapolated_update(problem, beta, state, m.z))
}

fn ista_update(problem: &CompositeProblem, state: &SolverState, z: Vector) -> SolverState {
    let f_y = problem.objective(&z);
    SolverState {
        k: state.k + 1,
        x: z.clone(),
        y: z.clone(),
        z: Some(z),
        f_y,
        accepted: None,
    }
}

fn apm_update(problem: &CompositeProblem, alpha: f64, state: &SolverState, z: Vector) -> SolverState {
    let k = state.k as f64;
    extrapolated_update(problem, k / (k + alpha), state, z)
}

/// `y⁺ = z`, `x⁺ = y⁺ + β(y⁺ − y)`.
fn extrapolated_update(problem: &CompositeProblem, beta: f64, state: &SolverState, z: Vector) -> SolverState {
    let f_y = problem.objective(&z);
    let x = &z + (&z - &state.y) * beta;
    SolverState {
        k: state.k + 1,
        x,
        y: z.clone(),
        z: Some(z),
        f_y,
        accepted: None,
    }
}

pub(crate) fn mapm_update(problem: &CompositeProblem, alpha: f64, state: &SolverState, z: Vector) -> SolverState {
    let k = state.k as f64;
    let f_z = problem.objective(&z);
    // Ties accept z; +∞ ≤ +∞ holds for f64.
    let accepted = f_z <= state.f_y;
    let (y, f_y) = if accepted {
        (z.clone(), f_z)
    } else {
        (state.y.clone(), state.f_y)
    };
    let beta = k / (k + alpha);
    let gamma = (k + alpha - 1.0) / (k + alpha);
    // Same evaluation order as apm so that an accepted step reproduces the
    // apm iterate bit for bit: the last term is an exact zero.
    let x = &y + (&y - &state.y) * beta + (&z - &y) * gamma;
    SolverState {
        k: state.k + 1,
        x,
        y,
        z: Some(z),
        f_y,
        accepted: Some(accepted),
    }
}

/// One row of a run trace. Iterates are kept so the trace can be certified
/// after the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(y_k)`.
    pub f_y: f64,
    /// `F(y_k) − F*`, when `F*` is known.
    pub gap: Option<f64>,
    /// `‖G_s(x_k)‖`.
    pub grad_map_norm: f64,
    /// mapm only: whether `y_k = z_{k-1}`. `None` at `k = 0`.
    pub accepted: Option<bool>,
    pub energy: Option<f64>,
    /// Certificate slacks `rhs − lhs` for checks indexed at this `k`.
    pub slacks: Vec<(CertificateName, f64)>,
    pub x: Vector,
    pub y: Vector,
}

/// Runs `config` from `x_0 = y_0 = x0` and returns one record per `k`,
/// including `k = 0`.
///
/// Stops after `max_iters` steps or once `‖G_s(x_k)‖ ≤ grad_map_tol`. When
/// `record_certificates` is set and the problem carries `x*` and `F*`, the
/// energy column and per-iteration certificate slacks are filled in.
pub fn run(problem: &CompositeProblem, config: &SolverConfig, x0: Vector) -> Result<Vec<IterationRecord>> {
    if x0.len() != problem.dim() {
        return Err(Error::RejectedInput(format!(
            "x0 has dim {} but problem has dim {}",
            x0.len(),
            problem.dim()
        )));
    }
    crate::ensure_finite(&x0, "x0")?;
    config.validate(problem)?;

    let s = config.step;
    let f_star = problem.known_optimum();
    let beta_known_mu = known_mu_momentum(problem.strong_convexity(), problem.lipschitz());
    let mut state = SolverState::initial(problem, x0);
    let mut records = Vec::with_capacity(config.max_iters.min(100_000) + 1);
    loop {
        let m = gradient_mapping(problem, s, &state.x);
        let grad_map_norm = m.g.norm();
        records.push(IterationRecord {
            k: state.k,
            f_y: state.f_y,
            gap: f_star.map(|fs| state.f_y - fs),
            grad_map_norm,
            accepted: state.accepted,
            energy: None,
            slacks: Vec::new(),
            x: state.x.clone(),
            y: state.y.clone(),
        });
        if state.k >= config.max_iters || grad_map_norm <= config.grad_map_tol {
            break;
        }
        state = match config.variant {
            Variant::Ista => ista_update(problem, &state, m.z),
            Variant::Apm => apm_update(problem, config.alpha, &state, m.z),
            Variant::Mapm => mapm_update(problem, config.alpha, &state, m.z),
            Variant::StronglyConvexApm => extrapolated_update(problem, beta_known_mu, &state, m.z),
        };
    }

    if config.record_certificates && problem.known_minimizer().is_some() && f_star.is_some() {
        attach_certificates(problem, config, &mut records)?;
    }
    Ok(records)
}

fn attach_certificates(
    problem: &CompositeProblem,
    config: &SolverConfig,
    records: &mut [IterationRecord],
) -> Result<()> {
    // The energy needs alpha >= 3; the other variants only get descent checks.
    let alpha = if config.variant.uses_alpha() { config.alpha } else { 3.0 };
    let ctx = EnergyContext::from_problem(problem, alpha, config.step)?;
    if config.variant.uses_alpha() {
        for r in records.iter_mut() {
            r.energy = Some(certificates::energy(&ctx, r.k, &r.x, &r.y, r.f_y)?);
        }
    }
    let cert = certificates::certify_trace(problem, &ctx, config.variant, records)?;
    for report in cert.reports {
        if let Some(r) = records.get_mut(report.k) {
            r.slacks.push((report.name, report.slack));
        }
    }
    Ok(())
}

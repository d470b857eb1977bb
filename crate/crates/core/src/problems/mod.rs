//! Composite problems `min F(x) = f(x) + g(x)`.

mod prox;
mod smooth;

pub use prox::{prox_box, prox_l1, prox_zero, ProxOracle, Regularizer};
pub use smooth::{
    power_iteration, LeastSquares, Quadratic, Smooth, SmoothOracle, POWER_MAX_ITERS, POWER_TOL,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Matrix, Result, Vector};

/// A smooth part and a regularizer on the same space, optionally carrying a
/// known minimizer `x*` and optimal value `F*`.
///
/// Problems are immutable once built; `with_known_solution` returns a new
/// value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeProblem {
    smooth: Smooth,
    nonsmooth: Regularizer,
    known_minimizer: Option<Vector>,
    known_optimum: Option<f64>,
}

impl CompositeProblem {
    pub fn new(smooth: Smooth, nonsmooth: Regularizer) -> Result<Self> {
        let dim = smooth.dim();
        if dim == 0 {
            return Err(Error::RejectedInput("problem dimension must be >= 1".into()));
        }
        if let Regularizer::Box { lo, .. } = &nonsmooth {
            if lo.len() != dim {
                return Err(Error::RejectedInput(format!(
                    "box has dim {} but f has dim {dim}",
                    lo.len()
                )));
            }
        }
        Ok(Self {
            smooth,
            nonsmooth,
            known_minimizer: None,
            known_optimum: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth(&self) -> &Smooth {
        &self.smooth
    }

    pub fn nonsmooth(&self) -> &Regularizer {
        &self.nonsmooth
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }

    pub fn strong_convexity(&self) -> f64 {
        self.smooth.strong_convexity()
    }

    pub fn known_minimizer(&self) -> Option<&Vector> {
        self.known_minimizer.as_ref()
    }

    pub fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    /// `F(x) = f(x) + g(x)`; `+∞` outside the domain of `g`.
    pub fn objective(&self, x: &Vector) -> f64 {
        let g = self.nonsmooth.value(x);
        if g == f64::INFINITY {
            return f64::INFINITY;
        }
        self.smooth.value(x) + g
    }

    /// Step used to validate a claimed minimizer: `1/(2L)`, or 1 when `L = 0`.
    pub fn canonical_step(&self) -> f64 {
        let l = self.lipschitz();
        if l > 0.0 {
            0.5 / l
        } else {
            1.0
        }
    }

    /// Attaches `x*` and `F*` after checking they are consistent with the
    /// problem: `‖G_s(x*)‖ ≤ 1e-8·(1 + ‖x*‖)` at `s = 1/(2L)` and
    /// `|F(x*) − F*| ≤ 1e-10·(1 + |F*|)`.
    pub fn with_known_solution(&self, x_star: Vector, f_star: f64) -> Result<Self> {
        if x_star.len() != self.dim() {
            return Err(Error::RejectedInput(format!(
                "x* has dim {} but problem has dim {}",
                x_star.len(),
                self.dim()
            )));
        }
        crate::ensure_finite(&x_star, "x*")?;
        let residual = crate::solvers::gradient_mapping(self, self.canonical_step(), &x_star)
            .g
            .norm();
        if residual > 1e-8 * (1.0 + x_star.norm()) {
            return Err(Error::RejectedInput(format!(
                "claimed minimizer has gradient-mapping norm {residual:e}"
            )));
        }
        let f_at = self.objective(&x_star);
        if !((f_at - f_star).abs() <= 1e-10 * (1.0 + f_star.abs())) {
            return Err(Error::RejectedInput(format!(
                "F(x*) = {f_at} disagrees with claimed F* = {f_star}"
            )));
        }
        let mut out = self.clone();
        out.known_minimizer = Some(x_star);
        out.known_optimum = Some(f_star);
        Ok(out)
    }

    /// Same problem with the known solution fields cleared.
    pub fn without_known_solution(&self) -> Self {
        let mut out = self.clone();
        out.known_minimizer = None;
        out.known_optimum = None;
        out
    }

    /// SHA-256 over the defining matrices and vectors in a canonical
    /// (row-major, little-endian) byte order. Known-solution fields are not
    /// part of the hash.
    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::new();
        self.smooth.canonical_bytes(&mut bytes);
        self.nonsmooth.canonical_bytes(&mut bytes);
        hex::encode(Sha256::digest(&bytes))
    }
}

/// `f(x) = ½xᵀQx − bᵀx`, `g ≡ 0`.
///
/// When `Qx = b` is consistent the minimizer and optimum are attached.
pub fn quadratic_problem(q: Matrix, b: Vector) -> Result<CompositeProblem> {
    let quad = Quadratic::new(q, b)?;
    let x_star = quad.minimizer();
    let problem = CompositeProblem::new(Smooth::Quadratic(quad), Regularizer::Zero)?;
    match x_star {
        Some(x) => {
            let f = problem.objective(&x);
            problem.with_known_solution(x, f)
        }
        None => Ok(problem),
    }
}

/// `f(x) = ½‖Ax − b‖²`, `g(x) = lam·‖x‖₁`. Known fields are left unset.
pub fn lasso_problem(a: Matrix, b: Vector, lam: f64) -> Result<CompositeProblem> {
    let reg = Regularizer::l1(lam)?;
    CompositeProblem::new(Smooth::LeastSquares(LeastSquares::new(a, b)?), reg)
}

/// Largest per-coordinate error between central differences and the
/// analytic gradient, relative to `1 + |∇f(x)ᵢ|`.
pub fn finite_difference_gradient_check<S: SmoothOracle + ?Sized>(oracle: &S, x: &Vector, h: f64) -> f64 {
    let grad = oracle.gradient(x);
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = oracle.value(&probe);
        probe[i] = x[i] - h;
        let down = oracle.value(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / (1.0 + grad[i].abs()));
    }
    worst
}

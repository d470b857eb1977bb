//! Smooth parts `f` of a composite problem.

use nalgebra::linalg::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result, Vector};

/// Value/gradient oracle for a convex, `L`-smooth, `μ`-strongly convex `f`.
///
/// `μ = 0` means "no strong convexity is declared"; certificates that need a
/// positive modulus are skipped in that case.
pub trait SmoothOracle {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn lipschitz(&self) -> f64;
    fn strong_convexity(&self) -> f64;
}

/// Relative tolerance for symmetry checks and for deciding that an
/// eigenvalue is numerically zero.
pub(crate) const EIG_TOL: f64 = 1e-12;

/// `f(x) = ½xᵀQx − bᵀx` with `Q` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    q: Matrix,
    b: Vector,
    lipschitz: f64,
    strong_convexity: f64,
}

impl Quadratic {
    /// Validates `Q` and reads `L`, `μ` off a symmetric eigensolve.
    pub fn new(q: Matrix, b: Vector) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::RejectedInput(format!(
                "Q must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.nrows() != b.len() {
            return Err(Error::RejectedInput(format!(
                "dim(Q) = {} but dim(b) = {}",
                q.nrows(),
                b.len()
            )));
        }
        crate::ensure_finite(&b, "b")?;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::RejectedInput("Q has non-finite entries".into()));
        }
        let scale = q.amax().max(1.0);
        let n = q.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[(i, j)] - q[(j, i)]).abs() > EIG_TOL * scale {
                    return Err(Error::RejectedInput(format!(
                        "Q is not symmetric: Q[{i},{j}] = {} but Q[{j},{i}] = {}",
                        q[(i, j)],
                        q[(j, i)]
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(q.clone());
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if lmin < -EIG_TOL * lmax.abs().max(1.0) {
            return Err(Error::RejectedInput(format!(
                "Q is indefinite: smallest eigenvalue {lmin}"
            )));
        }
        let lipschitz = lmax.max(0.0);
        let strong_convexity = if lmin <= EIG_TOL * lipschitz.max(1.0) {
            0.0
        } else {
            lmin
        };
        Ok(Self {
            q,
            b,
            lipschitz,
            strong_convexity,
        })
    }

    /// Builds `Q = U diag(λ) Uᵀ` from an orthogonal `U` and a nonnegative
    /// spectrum; `L` and `μ` are taken from the spectrum instead of an
    /// eigensolve.
    pub fn from_spectrum(rotation: &Matrix, spectrum: &[f64], b: Vector) -> Result<Self> {
        let n = spectrum.len();
        if rotation.nrows() != n || rotation.ncols() != n || b.len() != n {
            return Err(Error::RejectedInput("spectrum/rotation/b dims disagree".into()));
        }
        if spectrum.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::RejectedInput("spectrum must be finite and >= 0".into()));
        }
        let scaled = rotation * Matrix::from_diagonal(&Vector::from_column_slice(spectrum));
        let mut q = &scaled * rotation.transpose();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (q[(i, j)] + q[(j, i)]);
                q[(i, j)] = avg;
                q[(j, i)] = avg;
            }
        }
        let lipschitz = spectrum.iter().cloned().fold(0.0, f64::max);
        let strong_convexity = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            q,
            b,
            lipschitz,
            strong_convexity,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn linear_term(&self) -> &Vector {
        &self.b
    }

    /// A minimizer of `f`, if the normal equations `Qx = b` are consistent.
    ///
    /// Uses Cholesky when `μ > 0` and an SVD pseudo-solve otherwise.
    pub fn minimizer(&self) -> Option<Vector> {
        if self.b.iter().all(|v| *v == 0.0) {
            return Some(Vector::zeros(self.b.len()));
        }
        let x = if self.strong_convexity > 0.0 {
            self.q.clone().cholesky()?.solve(&self.b)
        } else {
            let svd = self.q.clone().svd(true, true);
            let eps = EIG_TOL * self.lipschitz.max(1.0);
            svd.solve(&self.b, eps).ok()?
        };
        let residual = (&self.q * &x - &self.b).norm();
        (residual <= 1e-10 * (1.0 + self.b.norm())).then_some(x)
    }
}

impl SmoothOracle for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x)) - self.b.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.q * x - &self.b
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

/// `f(x) = ½‖Ax − b‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
    lipschitz: f64,
    strong_convexity: f64,
}

impl LeastSquares {
    /// `L` comes from power iteration on `AᵀA`; `μ` is zero for wide `A` and
    /// the smallest eigenvalue of `AᵀA` otherwise.
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::RejectedInput(format!(
                "rows(A) = {} but dim(b) = {}",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(Error::RejectedInput("A must have at least one column".into()));
        }
        crate::ensure_finite(&b, "b")?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::RejectedInput("A has non-finite entries".into()));
        }
        let gram = a.transpose() * &a;
        let lipschitz = power_iteration(&gram, POWER_TOL, POWER_MAX_ITERS);
        let strong_convexity = if a.nrows() < a.ncols() {
            0.0
        } else {
            let lmin = SymmetricEigen::new(gram).eigenvalues.min();
            if lmin <= EIG_TOL * lipschitz.max(1.0) {
                0.0
            } else {
                lmin
            }
        };
        Ok(Self {
            a,
            b,
            lipschitz,
            strong_convexity,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn target(&self) -> &Vector {
        &self.b
    }

    /// Unique least-squares solution when `AᵀA` is positive definite.
    pub fn minimizer(&self) -> Option<Vector> {
        if self.strong_convexity <= 0.0 {
            return None;
        }
        let gram = self.a.transpose() * &self.a;
        let rhs = self.a.transpose() * &self.b;
        gram.cholesky().map(|c| c.solve(&rhs))
    }
}

impl SmoothOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

/// Closed set of smooth parts the artifact knows how to build, hash and
/// serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Smooth {
    Quadratic(Quadratic),
    LeastSquares(LeastSquares),
}

impl Smooth {
    /// Closed-form minimizer of `f` alone, when one is cheap to get.
    pub fn minimizer(&self) -> Option<Vector> {
        match self {
            Smooth::Quadratic(q) => q.minimizer(),
            Smooth::LeastSquares(ls) => ls.minimizer(),
        }
    }

    pub(crate) fn canonical_bytes(&self, out: &mut Vec<u8>) {
        match self {
            Smooth::Quadratic(q) => {
                out.extend_from_slice(b"quadratic");
                push_matrix(out, &q.q);
                push_vector(out, &q.b);
                push_f64(out, q.lipschitz);
                push_f64(out, q.strong_convexity);
            }
            Smooth::LeastSquares(ls) => {
                out.extend_from_slice(b"least_squares");
                push_matrix(out, &ls.a);
                push_vector(out, &ls.b);
                push_f64(out, ls.lipschitz);
                push_f64(out, ls.strong_convexity);
            }
        }
    }
}

impl SmoothOracle for Smooth {
    fn dim(&self) -> usize {
        match self {
            Smooth::Quadratic(q) => q.dim(),
            Smooth::LeastSquares(ls) => ls.dim(),
        }
    }

    fn value(&self, x: &Vector) -> f64 {
        match self {
            Smooth::Quadratic(q) => q.value(x),
            Smooth::LeastSquares(ls) => ls.value(x),
        }
    }

    fn gradient(&self, x: &Vector) -> Vector {
        match self {
            Smooth::Quadratic(q) => q.gradient(x),
            Smooth::LeastSquares(ls) => ls.gradient(x),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            Smooth::Quadratic(q) => q.lipschitz(),
            Smooth::LeastSquares(ls) => ls.lipschitz(),
        }
    }

    fn strong_convexity(&self) -> f64 {
        match self {
            Smooth::Quadratic(q) => q.strong_convexity(),
            Smooth::LeastSquares(ls) => ls.strong_convexity(),
        }
    }
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Stops once the eigen-residual `‖Mv − λv‖` drops below `tol·λ`, or after
/// `max_iters` multiplications.
pub fn power_iteration(m: &Matrix, tol: f64, max_iters: usize) -> f64 {
    let n = m.nrows();
    // Deterministic start with no special alignment to coordinate axes.
    let mut v = Vector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7 + 0.3).sin());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let mv = m * &v;
        lambda = v.dot(&mv);
        let norm = mv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let residual = (&mv - &v * lambda).norm();
        if residual <= tol * lambda.abs() {
            break;
        }
        v = mv / norm;
    }
    lambda
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_vector(out: &mut Vec<u8>, v: &Vector) {
    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for c in v.iter() {
        push_f64(out, *c);
    }
}

/// Row-major, prefixed by the shape.
fn push_matrix(out: &mut Vec<u8>, m: &Matrix) {
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            push_f64(out, m[(i, j)]);
        }
    }
}

pub(crate) fn push_vector_bytes(out: &mut Vec<u8>, v: &Vector) {
    push_vector(out, v);
}

pub(crate) fn push_f64_bytes(out: &mut Vec<u8>, v: f64) {
    push_f64(out, v);
}

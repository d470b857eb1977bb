//! Reproducible problem instances.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`; problem data uses stream 0 and starting points stream 1,
//! so a problem and its starting point can be regenerated independently.
//! Gaussian entries are drawn with `rand_distr::StandardNormal`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::problems::{CompositeProblem, LeastSquares, Quadratic, Regularizer, Smooth};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `½xᵀQx` with a random rotation and geometric spectrum in `[1, cond]`.
    Quadratic,
    /// Lasso with a square design whose `AᵀA` has spectrum in `[1, cond]`.
    Lasso,
    /// Lasso with a wide Gaussian design (`rows < dim`), so `μ = 0`.
    LassoFat,
    /// Strongly convex quadratic restricted to `[−1, 1]^dim`.
    BoxQuadratic,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Quadratic,
        ProblemKind::Lasso,
        ProblemKind::LassoFat,
        ProblemKind::BoxQuadratic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Lasso => "lasso",
            ProblemKind::LassoFat => "lasso-fat",
            ProblemKind::BoxQuadratic => "box-quadratic",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| {
                Error::RejectedConfig(format!(
                    "unknown problem '{s}'; valid problems: quadratic, lasso, lasso-fat, box-quadratic"
                ))
            })
    }
}

/// Generator parameters; together with the seed they determine a problem
/// bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Number of unknowns.
    pub dim: usize,
    /// Rows of the design matrix (lasso-fat only).
    pub rows: usize,
    /// Condition number `L/μ` of the smooth part (ignored by lasso-fat).
    pub cond: f64,
    /// l1 weight (lasso kinds only).
    pub lam: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn quadratic(dim: usize, cond: f64, seed: u64) -> Self {
        Self {
            kind: ProblemKind::Quadratic,
            dim,
            rows: dim,
            cond,
            lam: 1.0,
            seed,
        }
    }

    pub fn lasso(dim: usize, cond: f64, lam: f64, seed: u64) -> Self {
        Self {
            kind: ProblemKind::Lasso,
            dim,
            rows: dim,
            cond,
            lam,
            seed,
        }
    }

    pub fn lasso_fat(rows: usize, dim: usize, lam: f64, seed: u64) -> Self {
        Self {
            kind: ProblemKind::LassoFat,
            dim,
            rows,
            cond: 1.0,
            lam,
            seed,
        }
    }

    pub fn box_quadratic(dim: usize, cond: f64, seed: u64) -> Self {
        Self {
            kind: ProblemKind::BoxQuadratic,
            dim,
            rows: dim,
            cond,
            lam: 1.0,
            seed,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            ProblemKind::LassoFat => format!("{}-{}x{}-lam{}", self.kind, self.rows, self.dim, self.lam),
            ProblemKind::Lasso => format!("{}-d{}-c{}-lam{}", self.kind, self.dim, self.cond, self.lam),
            _ => format!("{}-d{}-c{}", self.kind, self.dim, self.cond),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::RejectedConfig("dim must be >= 1".into()));
        }
        if !(self.cond >= 1.0 && self.cond.is_finite()) {
            return Err(Error::RejectedConfig(format!("cond must be >= 1, got {}", self.cond)));
        }
        match self.kind {
            ProblemKind::Lasso | ProblemKind::LassoFat if !(self.lam > 0.0 && self.lam.is_finite()) => {
                Err(Error::RejectedConfig(format!("lam must be > 0, got {}", self.lam)))
            }
            ProblemKind::LassoFat if self.rows == 0 || self.rows >= self.dim => Err(Error::RejectedConfig(
                format!("lasso-fat needs 1 <= rows < dim, got {}x{}", self.rows, self.dim),
            )),
            _ => Ok(()),
        }
    }

    fn data_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Builds the problem. No known solution is attached.
    pub fn build(&self) -> Result<CompositeProblem> {
        self.validate()?;
        let mut rng = self.data_rng();
        let n = self.dim;
        match self.kind {
            ProblemKind::Quadratic => {
                let u = random_rotation(&mut rng, n);
                let quad = Quadratic::from_spectrum(&u, &geometric(1.0, self.cond, n), Vector::zeros(n))?;
                CompositeProblem::new(Smooth::Quadratic(quad), Regularizer::Zero)
            }
            ProblemKind::Lasso => {
                let u = random_rotation(&mut rng, n);
                let v = random_rotation(&mut rng, n);
                let sigma = Vector::from_vec(geometric(1.0, self.cond.sqrt(), n));
                let a = &u * Matrix::from_diagonal(&sigma) * v.transpose();
                let b = gaussian_vector(&mut rng, n);
                let ls = LeastSquares::new(a, b)?;
                CompositeProblem::new(Smooth::LeastSquares(ls), Regularizer::l1(self.lam)?)
            }
            ProblemKind::LassoFat => {
                let a = Matrix::from_fn(self.rows, n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let b = gaussian_vector(&mut rng, self.rows);
                let ls = LeastSquares::new(a, b)?;
                CompositeProblem::new(Smooth::LeastSquares(ls), Regularizer::l1(self.lam)?)
            }
            ProblemKind::BoxQuadratic => {
                let u = random_rotation(&mut rng, n);
                let spectrum = geometric(1.0, self.cond, n);
                // Unconstrained minimizer c ~ N(0, 4I), mostly outside the box.
                let c = gaussian_vector(&mut rng, n) * 2.0;
                let q = &u * Matrix::from_diagonal(&Vector::from_column_slice(&spectrum)) * u.transpose();
                let b = &q * &c;
                let quad = Quadratic::from_spectrum(&u, &spectrum, b)?;
                let reg = Regularizer::boxed(Vector::from_element(n, -1.0), Vector::from_element(n, 1.0))?;
                CompositeProblem::new(Smooth::Quadratic(quad), reg)
            }
        }
    }

    /// Deterministic starting point: standard normal for quadratics, zero for
    /// the lasso kinds, uniform in the box for box-quadratic.
    pub fn initial_point(&self) -> Vector {
        let mut rng = self.data_rng();
        rng.set_stream(1);
        let n = self.dim;
        match self.kind {
            ProblemKind::Quadratic => gaussian_vector(&mut rng, n),
            ProblemKind::Lasso | ProblemKind::LassoFat => Vector::zeros(n),
            ProblemKind::BoxQuadratic => Vector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)),
        }
    }
}

/// One suite member with its starting point.
#[derive(Debug, Clone)]
pub struct SuiteProblem {
    pub spec: ProblemSpec,
    pub problem: CompositeProblem,
    pub x0: Vector,
}

impl SuiteProblem {
    pub fn label(&self) -> String {
        self.spec.label()
    }
}

pub const SUITE_CONDITIONS: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
pub const SUITE_DIMS: [usize; 3] = [2, 20, 200];

/// The twenty suite specifications:
/// twelve rotated quadratics (conditions {1, 10, 100, 1000} × dims {2, 20, 200}),
/// three square lassos and three box quadratics (all `μ > 0`), and two wide
/// lassos (`μ = 0`).
pub fn suite_specs(seed: u64) -> Vec<ProblemSpec> {
    let mut specs = Vec::with_capacity(20);
    for &dim in &SUITE_DIMS {
        for &cond in &SUITE_CONDITIONS {
            specs.push(ProblemSpec::quadratic(dim, cond, seed));
        }
    }
    for dim in [10, 30, 60] {
        specs.push(ProblemSpec::lasso(dim, 100.0, 0.5, seed));
    }
    specs.push(ProblemSpec::lasso_fat(20, 50, 1.0, seed));
    specs.push(ProblemSpec::lasso_fat(50, 100, 1.0, seed));
    for (dim, cond) in [(5, 10.0), (20, 100.0), (50, 30.0)] {
        specs.push(ProblemSpec::box_quadratic(dim, cond, seed));
    }
    specs
}

pub fn generate_suite(seed: u64) -> Vec<SuiteProblem> {
    suite_specs(seed)
        .into_iter()
        .map(|spec| {
            let problem = spec.build().expect("suite specifications are valid");
            let x0 = spec.initial_point();
            SuiteProblem { spec, problem, x0 }
        })
        .collect()
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive; exact at both ends.
fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = hi / lo;
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => lo * ratio.powf(i as f64 / (n - 1) as f64),
        })
        .collect()
}

/// Orthogonal factor of a QR decomposition of a Gaussian matrix.
fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

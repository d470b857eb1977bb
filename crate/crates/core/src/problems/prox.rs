//! Prox-friendly nonsmooth parts `g`.

use serde::{Deserialize, Serialize};

use super::smooth::{push_f64_bytes, push_vector_bytes};
use crate::{Error, Result, Vector};

/// Value/prox oracle for a convex, proper, lsc `g`.
///
/// `value` may return `f64::INFINITY` outside the effective domain.
/// `prox(v, t)` returns `argmin_u g(u) + ‖u − v‖²/(2t)`.
pub trait ProxOracle {
    fn value(&self, x: &Vector) -> f64;
    fn prox(&self, v: &Vector, t: f64) -> Vector;
}

/// Coordinatewise soft-thresholding, the prox of `t‖·‖₁`.
pub fn prox_l1(v: &Vector, t: f64) -> Vector {
    v.map(|vi| vi.signum() * (vi.abs() - t).max(0.0))
}

/// Projection onto the box `[lo, hi]`, the prox of its indicator.
pub fn prox_box(v: &Vector, lo: &Vector, hi: &Vector) -> Result<Vector> {
    check_box(lo, hi)?;
    if v.len() != lo.len() {
        return Err(Error::RejectedInput(format!(
            "dim(v) = {} but box has dim {}",
            v.len(),
            lo.len()
        )));
    }
    Ok(clamp(v, lo, hi))
}

/// Prox of `g ≡ 0`.
pub fn prox_zero(v: &Vector, _t: f64) -> Vector {
    v.clone()
}

fn clamp(v: &Vector, lo: &Vector, hi: &Vector) -> Vector {
    Vector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i]))
}

fn check_box(lo: &Vector, hi: &Vector) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::RejectedInput(format!(
            "box bounds have dims {} and {}",
            lo.len(),
            hi.len()
        )));
    }
    for i in 0..lo.len() {
        if lo[i].is_nan() || hi[i].is_nan() || lo[i] > hi[i] {
            return Err(Error::RejectedInput(format!(
                "box bound lo[{i}] = {} exceeds hi[{i}] = {}",
                lo[i], hi[i]
            )));
        }
    }
    Ok(())
}

/// The regularizers shipped with the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regularizer {
    /// `g ≡ 0`; the methods reduce to (accelerated) gradient descent.
    Zero,
    /// `g(x) = lam·‖x‖₁`.
    L1 { lam: f64 },
    /// Indicator of `{x : lo ≤ x ≤ hi}`.
    Box { lo: Vector, hi: Vector },
    /// `g(x) = (lam/2)·‖x‖²`.
    SquaredL2 { lam: f64 },
}

impl Regularizer {
    pub fn l1(lam: f64) -> Result<Self> {
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::RejectedInput(format!("l1 weight must be > 0, got {lam}")));
        }
        Ok(Regularizer::L1 { lam })
    }

    pub fn squared_l2(lam: f64) -> Result<Self> {
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::RejectedInput(format!(
                "squared-l2 weight must be > 0, got {lam}"
            )));
        }
        Ok(Regularizer::SquaredL2 { lam })
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        check_box(&lo, &hi)?;
        Ok(Regularizer::Box { lo, hi })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Zero => "zero",
            Regularizer::L1 { .. } => "l1",
            Regularizer::Box { .. } => "box",
            Regularizer::SquaredL2 { .. } => "squared_l2",
        }
    }

    pub(crate) fn canonical_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.name().as_bytes());
        match self {
            Regularizer::Zero => {}
            Regularizer::L1 { lam } | Regularizer::SquaredL2 { lam } => push_f64_bytes(out, *lam),
            Regularizer::Box { lo, hi } => {
                push_vector_bytes(out, lo);
                push_vector_bytes(out, hi);
            }
        }
    }
}

impl ProxOracle for Regularizer {
    fn value(&self, x: &Vector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lam } => lam * x.lp_norm(1),
            Regularizer::Box { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (l, h))| l <= v && v <= h);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::SquaredL2 { lam } => 0.5 * lam * x.norm_squared(),
        }
    }

    fn prox(&self, v: &Vector, t: f64) -> Vector {
        match self {
            Regularizer::Zero => prox_zero(v, t),
            Regularizer::L1 { lam } => prox_l1(v, lam * t),
            Regularizer::Box { lo, hi } => clamp(v, lo, hi),
            Regularizer::SquaredL2 { lam } => v / (1.0 + lam * t),
        }
    }
}

//! Accelerated proximal gradient methods for composite convex problems
//! `F = f + g`, together with a certificate engine that re-evaluates the
//! Lyapunov energy inequalities behind their convergence rates on every
//! iteration of a recorded trace.
//!
//! The crate is organised bottom-up:
//!
//! - [`problems`]: smooth oracles, prox-friendly regularizers and the
//!   [`CompositeProblem`](problems::CompositeProblem) that binds them.
//! - [`solvers`]: the gradient mapping, the ISTA / APM / monotone APM /
//!   known-μ steppers and the [`run`](solvers::run) driver.
//! - [`certificates`]: energy, decrement and envelope checks.
//! - [`harness`]: reference solutions, reproducible problem suites, rate fits
//!   and solver comparisons.
//! - [`trace`]: the on-disk trace and report formats.

pub mod certificates;
pub mod error;
pub mod harness;
pub mod problems;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};

/// Finite-dimensional stand-in for an element of the underlying Hilbert space.
pub type Vector = nalgebra::DVector<f64>;

/// Dense row/column matrix used by the quadratic and least-squares oracles.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Rejects vectors with NaN or infinite coordinates, or with zero length.
pub fn ensure_finite(v: &Vector, what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::RejectedInput(format!("{what} must have dim >= 1")));
    }
    if let Some(i) = v.iter().position(|c| !c.is_finite()) {
        return Err(Error::RejectedInput(format!(
            "{what} has a non-finite coordinate at index {i}"
        )));
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use super::rate::{fit_default, RateFit};
use crate::certificates::rho_lower_bound_for;
use crate::problems::CompositeProblem;
use crate::solvers::{run, IterationRecord, SolverConfig};
use crate::{Error, Result, Vector};

/// One solver's run inside a comparison.
#[derive(Debug, Clone)]
pub struct Column {
    pub label: String,
    pub config: SolverConfig,
    pub records: Vec<IterationRecord>,
    /// `Err` message when the gaps admit no fit.
    pub fit: std::result::Result<RateFit, String>,
}

impl Column {
    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gap.unwrap_or(f64::NAN)).collect()
    }

    /// First `k` with `gap_k ≤ tol`.
    pub fn first_crossing(&self, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.gap.is_some_and(|g| g <= tol))
            .map(|r| r.k)
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub columns: Vec<Column>,
    /// Certified `ρ` at `s = 1/(2L)`.
    pub rho_lower_bound: f64,
    /// `√(μ/L)`, the known-μ rate, for context.
    pub sqrt_mu_over_l: f64,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub label: String,
    pub solver: String,
    pub alpha: f64,
    pub step: f64,
    pub iterations: usize,
    pub final_gap: f64,
    pub rho_hat: Option<f64>,
    pub r_squared: Option<f64>,
    pub window: Option<(usize, usize)>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub solvers: Vec<SolverSummary>,
    pub rho_lower_bound: f64,
    pub sqrt_mu_over_l: f64,
    pub f_star: f64,
}

impl Comparison {
    /// Longest run length; shorter columns are padded with `None`.
    pub fn rows(&self) -> usize {
        self.columns.iter().map(|c| c.records.len()).max().unwrap_or(0)
    }

    /// `gap_k` per column, `None` past a column's end.
    pub fn row(&self, k: usize) -> Vec<Option<f64>> {
        self.columns
            .iter()
            .map(|c| c.records.get(k).and_then(|r| r.gap))
            .collect()
    }

    pub fn summary(&self) -> ComparisonSummary {
        let solvers = self
            .columns
            .iter()
            .map(|c| {
                let last = c.records.last();
                let (rho_hat, r_squared, window, fit_error) = match &c.fit {
                    Ok(f) => (Some(f.rho_hat), Some(f.r_squared), Some(f.window), None),
                    Err(e) => (None, None, None, Some(e.clone())),
                };
                SolverSummary {
                    label: c.label.clone(),
                    solver: c.config.variant.to_string(),
                    alpha: c.config.alpha,
                    step: c.config.step,
                    iterations: last.map_or(0, |r| r.k),
                    final_gap: last.and_then(|r| r.gap).unwrap_or(f64::NAN),
                    rho_hat,
                    r_squared,
                    window,
                    fit_error,
                }
            })
            .collect();
        ComparisonSummary {
            solvers,
            rho_lower_bound: self.rho_lower_bound,
            sqrt_mu_over_l: self.sqrt_mu_over_l,
            f_star: self.f_star,
        }
    }
}

/// Runs every config from the same `x0`, concurrently, and fits a rate to
/// each gap column. The problem must carry `F*`.
pub fn compare_solvers(
    problem: &CompositeProblem,
    configs: &[(String, SolverConfig)],
    x0: &Vector,
) -> Result<Comparison> {
    let f_star = problem.known_optimum().ok_or_else(|| {
        Error::ReferenceUnavailable("comparison needs the optimal value F*".into())
    })?;
    for (_, cfg) in configs {
        cfg.validate(problem)?;
    }
    let runs: Vec<Result<Vec<IterationRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(_, cfg)| scope.spawn(move || run(problem, cfg, x0.clone())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    let mut columns = Vec::with_capacity(configs.len());
    for ((label, cfg), records) in configs.iter().zip(runs) {
        let records = records?;
        let gaps: Vec<f64> = records.iter().map(|r| r.f_y - f_star).collect();
        let fit = fit_default(&gaps, f_star).map_err(|e| e.to_string());
        columns.push(Column {
            label: label.clone(),
            config: cfg.clone(),
            records,
            fit,
        });
    }
    let (l, mu) = (problem.lipschitz(), problem.strong_convexity());
    Ok(Comparison {
        columns,
        rho_lower_bound: rho_lower_bound_for(mu, 0.5 / l, l),
        sqrt_mu_over_l: (mu / l).sqrt(),
        f_star,
    })
}

//! Turning command-line selectors into problem specs and solver configs.

use proxcert::harness::{ProblemKind, ProblemSpec};
use proxcert::problems::CompositeProblem;
use proxcert::solvers::{SolverConfig, StepMode, Variant};

use crate::{Failure, ProblemArgs, SolverArgs};

pub const SEED_ENV: &str = "PROXCERT_SEED";

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("{SEED_ENV}='{v}' is not an unsigned 64-bit integer"))),
        Err(_) => Ok(None),
    }
}

pub fn problem_spec(args: &ProblemArgs) -> Result<ProblemSpec, Failure> {
    let kind: ProblemKind = args.problem.parse()?;
    let seed = env_seed()?.unwrap_or(args.seed);
    Ok(match kind {
        ProblemKind::Quadratic => ProblemSpec::quadratic(args.dim, args.cond, seed),
        ProblemKind::Lasso => ProblemSpec::lasso(args.dim, args.cond, args.lam, seed),
        ProblemKind::LassoFat => {
            let rows = args.rows.unwrap_or((args.dim / 2).max(1));
            ProblemSpec::lasso_fat(rows, args.dim, args.lam, seed)
        }
        ProblemKind::BoxQuadratic => ProblemSpec::box_quadratic(args.dim, args.cond, seed),
    })
}

pub fn solver_config(args: &SolverArgs, problem: &CompositeProblem) -> Result<SolverConfig, Failure> {
    let variant: Variant = args.solver.parse()?;
    let step = args.step_mode.parse::<StepMode>()?.resolve(problem.lipschitz())?;
    let cfg = SolverConfig::new(variant, step)
        .alpha(args.alpha)
        .max_iters(args.max_iters)
        .grad_map_tol(args.grad_map_tol);
    cfg.validate(problem)?;
    Ok(cfg)
}

/// One `--spec` of `compare`: solver settings, plus any problem keys it
/// mentions (which must agree with the shared problem).
pub struct CompareSpec {
    pub label: String,
    pub solver: SolverArgs,
    pub problem: ProblemArgs,
}

pub fn parse_compare_spec(text: &str, base_problem: &ProblemArgs) -> Result<CompareSpec, Failure> {
    let mut solver = SolverArgs {
        solver: "mapm".into(),
        alpha: 3.0,
        step_mode: "half-inverse-L".into(),
        max_iters: 1000,
        grad_map_tol: 0.0,
    };
    let mut problem = base_problem.clone();
    let mut label = None;
    let bad = |key: &str, value: &str| Failure::Config(format!("bad value '{value}' for '{key}' in --spec '{text}'"));
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("expected key=value, got '{item}' in --spec '{text}'")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "solver" => solver.solver = value.to_string(),
            "alpha" => solver.alpha = value.parse().map_err(|_| bad(key, value))?,
            "step-mode" | "step_mode" => solver.step_mode = value.to_string(),
            "max-iters" | "max_iters" => solver.max_iters = value.parse().map_err(|_| bad(key, value))?,
            "grad-map-tol" | "grad_map_tol" => solver.grad_map_tol = value.parse().map_err(|_| bad(key, value))?,
            "label" => label = Some(value.to_string()),
            "problem" => problem.problem = value.to_string(),
            "dim" => problem.dim = value.parse().map_err(|_| bad(key, value))?,
            "rows" => problem.rows = Some(value.parse().map_err(|_| bad(key, value))?),
            "cond" => problem.cond = value.parse().map_err(|_| bad(key, value))?,
            "lam" => problem.lam = value.parse().map_err(|_| bad(key, value))?,
            "seed" => problem.seed = value.parse().map_err(|_| bad(key, value))?,
            other => {
                return Err(Failure::Config(format!(
                    "unknown key '{other}' in --spec; valid keys: solver, alpha, step-mode, max-iters, \
                     grad-map-tol, label, problem, dim, rows, cond, lam, seed"
                )))
            }
        }
    }
    let label = label.unwrap_or_else(|| solver.solver.clone());
    Ok(CompareSpec { label, solver, problem })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ProblemArgs {
        ProblemArgs {
            problem: "quadratic".into(),
            dim: 5,
            rows: None,
            cond: 10.0,
            lam: 0.5,
            seed: 1,
        }
    }

    #[test]
    fn parses_solver_keys() {
        let s = parse_compare_spec("solver=apm, alpha=4,step-mode=inverse-L,max-iters=7", &base()).unwrap();
        assert_eq!(s.label, "apm");
        assert_eq!(s.solver.alpha, 4.0);
        assert_eq!(s.solver.step_mode, "inverse-L");
        assert_eq!(s.solver.max_iters, 7);
        assert_eq!(s.problem.dim, 5);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(parse_compare_spec("solver=apm,beta=1", &base()).is_err());
        assert!(parse_compare_spec("alpha=three", &base()).is_err());
        assert!(parse_compare_spec("mapm", &base()).is_err());
    }

    #[test]
    fn problem_keys_override_base() {
        let s = parse_compare_spec("solver=ista,dim=9,problem=lasso", &base()).unwrap();
        assert_eq!(s.problem.dim, 9);
        assert_eq!(s.problem.problem, "lasso");
    }
}

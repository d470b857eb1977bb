//! Reference solutions, reproducible problem suites, rate fits and solver
//! comparisons.

mod compare;
mod rate;
mod reference;
mod suite;

pub use compare::{compare_solvers, Column, Comparison, ComparisonSummary, SolverSummary};
pub use rate::{default_window, fit_default, fit_linear_rate, gap_floor, RateFit, Window, MIN_WINDOW};
pub use reference::{
    reference_solution, with_reference, ReferenceMethod, ReferenceSolution, MIN_REFERENCE_BUDGET, REFERENCE_RTOL,
};
pub use suite::{
    generate_suite, suite_specs, ProblemKind, ProblemSpec, SuiteProblem, SUITE_CONDITIONS, SUITE_DIMS,
};

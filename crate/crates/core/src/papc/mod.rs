//! The PAPC iteration and its convergence machinery.

mod metric;
mod params;
mod problem;
mod report;
mod solver;

pub use metric::{h_norm, HMetric};
pub use params::{
    delta_bound, iteration_budget, tune_parameters, validate_params, BudgetTarget, TunedParameters,
    ValidatedParams,
};
pub use problem::{DualBlock, IterateState, MonitorValues, SaddleProblem};
pub use report::{
    aposteriori_bound, estimate_rate, estimate_rate_default, ConvergenceReport, StopReason,
    RATE_BURN_IN, RATE_WINDOW,
};
pub use solver::{
    certified_delta, optimality_residual, papc_step, solve, solve_with_observer, SolverConfig,
};

//! Boosted weak learners, QUBO-based selection and the thresholded strong
//! classifier.

mod ensemble;
mod model;
mod qubo;
mod solvers;

pub use ensemble::{train_weak_ensemble, WeakEnsemble, EPS_CLAMP};
pub use model::{compute_threshold, qboost_predict, QBoostConfig, QBoostModel, ThresholdMode};
pub use qubo::{build_qubo, lambda_ceiling, qubo_energy, QuboMatrix, QuboMode};
pub use solvers::{
    solve_branch_bound, solve_exhaustive, solve_sa, BinarySolution, QuboSampler, SaParams, Solver,
    SolverKind, EXHAUSTIVE_MAX,
};

//! Computational problems, oracle-mediated algorithms and towers.

mod algorithm;
mod convergence;
mod factorization;
mod problem;
mod tower;

pub use algorithm::{
    check_locality, run_algorithm, FnAlgorithm, GeneralAlgorithm, Locality, QueryTrace, Session,
    Step, DEFAULT_BUDGET,
};
pub use convergence::{probe_convergence, ConvergenceReport};
pub use factorization::{finite_query_factorization, FactorizedTower, TableFn};
pub use problem::{check_consistency, check_metric, ConsistencyReport, Problem};
pub use tower::{evaluate_tower, SingleStageTower, Tower};

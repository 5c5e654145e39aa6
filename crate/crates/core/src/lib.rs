//! Matching maximum score estimation for two-sided one-to-one
//! transferable-utility matching markets, and counterfactual equilibrium
//! simulation through the Shapley–Shubik assignment problem.
//!
//! The pieces, bottom-up:
//!
//! - [`market`]: firms, normalized characteristics, distances.
//! - [`score`]: joint production function and the maximum score objective.
//! - [`estimator`]: differential-evolution and grid maximization of the score,
//!   identified-set brackets and fit reports.
//! - [`assignment`]: the assignment LP with an unmatched option, dual prices
//!   and a stability certificate.
//! - [`counterfactual`]: same-country merger prohibition under Monte Carlo
//!   shocks.
//! - [`synthetic`]: markets with known parameters whose observed matching is an
//!   equilibrium, for recovery experiments.
//! - [`ingest`]: CSV merger lists, firm-year panels and capital coordinates.
//! - [`cli`]: the `matchscore` command-line front end.

pub mod assignment;
pub mod cli;
pub mod counterfactual;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod market;
pub mod rng;
pub mod score;
pub mod synthetic;

pub use assignment::{
    brute_force_assignment, solve_assignment, verify_stability, AssignmentResult, ValueMatrix,
};
pub use counterfactual::{simulate, CounterfactualConfig, CounterfactualStats};
pub use error::{Error, Result};
pub use estimator::{
    fit_report, maximize_score_de, maximize_score_grid, EstimationConfig, FitReport, IdentifiedSet,
};
pub use market::{
    build_market, normalize_vector, pair_distance, Capital, CoordTable, Firm, Market, MatchList,
    Side,
};
pub use score::{joint_production, percent_correct, score, ParamVector};
pub use synthetic::{generate_market, recovery_experiment, SyntheticSpec};

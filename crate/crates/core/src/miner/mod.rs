//! Formula mining by Bayesian optimization in the embedding space.

mod acquire;
mod cv;
mod gp;
mod mine;
mod objective;

pub use acquire::{acquire, score_candidates, AcquireConfig, AcquisitionStrategy, CandidatePool};
pub use cv::{cross_validate, stratified_folds, CvConfig, CvReport, FoldReport, MetricSummary};
pub use gp::{beta_schedule, matern52, ucb, GpConfig, GpHyper, GpModel};
pub use mine::{mine, mining_keys, BetaConfig, BoConfig, MiningResult, StopReason, TraceEntry};
pub use objective::{objective_from_rho, objective_g, G_EPSILON};

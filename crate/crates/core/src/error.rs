use std::io;

use thiserror::Error;

use crate::stl::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid interval [{lo}, {hi}]: {reason}")]
    InvalidInterval { lo: f64, hi: f64, reason: &'static str },

    #[error("variable x{var} out of range for a {dim}-dimensional trajectory")]
    VariableOutOfRange { var: usize, dim: usize },

    #[error("time index {t} out of range for a trajectory of {n_points} points")]
    TimeOutOfRange { t: usize, n_points: usize },

    #[error("temporal window is empty at time index {t} (formula needs more samples than the trace provides)")]
    EmptyWindow { t: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension {dim} has zero variance")]
    ZeroVariance { dim: usize },

    #[error("missing normalization statistics for x{var}")]
    MissingStats { var: usize },

    #[error("expected {expected} parameters, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("formula has zero self-norm on the reference trajectories")]
    ZeroSelfNorm,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("no eligible formulae: {0}")]
    NoCandidates(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

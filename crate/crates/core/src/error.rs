use std::path::PathBuf;

use thiserror::Error;

use crate::domain::EpisodeSource;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("budget exhausted: consuming {requested} {kind:?} episode(s) with {remaining} remaining")]
    BudgetExhausted {
        kind: EpisodeSource,
        requested: u64,
        remaining: u64,
    },
    #[error("step called on a finished episode")]
    StepAfterTerminal,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("teacher calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("layout cannot be solved: {0}")]
    UnsolvableLayout(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("store `{0}` is empty but the batch ratio requires samples from it")]
    EmptyStore(&'static str),
    #[error("dataset format error: {0}")]
    Format(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset not found: {}", .0.display())]
    MissingDataset(PathBuf),
    #[error("numeric divergence at gradient step {step}: {detail}")]
    NumericDivergence { step: u64, detail: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

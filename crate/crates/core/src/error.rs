use std::path::PathBuf;

use chrono::NaiveDateTime;
use thiserror::Error;

/// Errors produced by the data preparation stages.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header mismatch: expected column `{column}`")]
    Header { path: PathBuf, column: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(NaiveDateTime),
    #[error("series needs at least {needed} non-missing consumption values, found {found}")]
    TooFewValues { needed: usize, found: usize },
    #[error("cannot fill {feature} at {at}: no value within reach")]
    Unfillable { feature: &'static str, at: NaiveDateTime },
    #[error("scaler needs at least 4 records in years <= {cutoff}, found {found}")]
    TooFewTrainingRecords { cutoff: i32, found: usize },
    #[error("window width must be at least 1")]
    ZeroWindow,
}

/// Errors produced by anomaly detection, substitution and injection.
#[derive(Debug, Error)]
pub enum AnomalyError {
    #[error("invalid DBSCAN parameters: eps={eps}, min_samples={min_samples}")]
    InvalidParams { eps: f64, min_samples: usize },
    #[error("labeling has {labels} entries but the dataset has {records} records")]
    LengthMismatch { labels: usize, records: usize },
    #[error("no clean training record at hour {hour:02}:00 to substitute {at}")]
    Unresolvable { hour: u32, at: NaiveDateTime },
    #[error("invalid injection spec: {0}")]
    InvalidInjection(String),
    #[error("injection rate {rate} over {records} records selects no points")]
    TooFewRecords { rate: f64, records: usize },
}

/// Errors from the loss functions.
#[derive(Debug, Error)]
pub enum LossError {
    #[error("invalid loss constants: {0}")]
    InvalidSpec(String),
    #[error("batch loss of an empty batch")]
    EmptyBatch,
}

/// Errors from the LSTM network, optimizer and training loop.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

/// Errors from the evaluation metrics.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions but {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("cannot evaluate an empty prediction set")]
    Empty,
    #[error("bin width must be positive, got {0}")]
    BinWidth(f64),
}

/// Errors raised by the experiment orchestration layer.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("stage `{stage}` failed: {cause}")]
    Stage { stage: &'static str, cause: String },
}

impl PipelineError {
    pub fn stage(stage: &'static str, cause: impl std::fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            cause: cause.to_string(),
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, PipelineError::Validation(_))
    }
}

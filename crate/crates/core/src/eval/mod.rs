//! Experiment support: correlation against external metrics, noise injection,
//! synthetic workloads and the throughput harness.

mod noise;
mod pearson;
mod scores;
mod stress;
pub mod synthetic;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use noise::{inject_noise, NoiseKind, NoiseSpec};
pub use pearson::{pearson, Correlation};
pub use scores::{
    correlate_pairs, join_scores, read_metric_csv, read_metric_from, read_scores_csv,
    read_scores_from, write_scores_csv, JoinedScores, ScorePair, SCORES_HEADER,
};
pub use stress::{stress, StressOptions, ThroughputReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("correlation needs at least 3 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in correlation input")]
    NonFinite,
    #[error("noise intensity must lie in [0, 1], got {0}")]
    IntensityOutOfRange(f64),
    #[error("unknown noise kind `{0}`")]
    InvalidNoiseKind(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl EvalError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        EvalError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<io::Error> for EvalError {
    fn from(source: io::Error) -> Self {
        EvalError::io("<output>", source)
    }
}

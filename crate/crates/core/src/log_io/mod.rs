//! Reading and writing event logs.
//!
//! CSV is the interchange format: one row per event, one column naming the case,
//! every other non-empty cell an event attribute. A minimal XES subset can be read
//! as well.

mod csv_log;
mod xes;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::event::EventError;

pub use csv_log::{
    read_csv_log, read_csv_log_from, write_csv_log, write_csv_log_to, CsvLogSchema, Ordering,
};
pub use xes::{read_xes_log, read_xes_log_from};

#[derive(Debug, Error)]
pub enum LogIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("duplicate column name `{0}` in header")]
    DuplicateColumn(String),
    #[error("case column `{0}` not found in header")]
    UnknownCaseColumn(String),
    #[error("line {line}: cannot parse timestamp `{value}`")]
    BadTimestamp { line: u64, value: String },
    #[error("attribute `{0}` collides with the case column")]
    CaseColumnCollision(String),
    #[error("XES at byte {position}: {message}")]
    Xes { position: u64, message: String },
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LogIoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LogIoError::Io {
            path: path.into(),
            source,
        }
    }
}

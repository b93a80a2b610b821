//! Soft conformance checking against descriptive transition models.
//!
//! A descriptive model is learned from an event log by counting which
//! accomplishment directly follows which (over any attribute: activity names,
//! originators, ...), normalizing rows, and merging the result with the uniform
//! "flower" model under a weight `alpha`. The [`OnlineChecker`] then scores every
//! case of an unbounded, intertwined event stream in constant time per event and
//! bounded memory.
//!
//! ```
//! use softconform::{count_directly_follows, normalize_counts, prepare_for_conformance};
//! use softconform::{CheckerConfig, EventLog, OnlineChecker, Trace};
//!
//! let log = EventLog::from_variants([
//!     (Trace::from_labels("name", &["A", "B", "C"]).unwrap(), 3),
//!     (Trace::from_labels("name", &["A", "A", "B", "C"]).unwrap(), 1),
//! ]);
//! let model = normalize_counts(&count_directly_follows(&log, "name").unwrap());
//! let prepared = prepare_for_conformance(&model, 0.5).unwrap();
//!
//! let mut checker = OnlineChecker::new(CheckerConfig::new(prepared, 1000)).unwrap();
//! checker.process("c1", "A", 1);
//! checker.process("c1", "B", 2);
//! let n = checker.process("c1", "C", 3);
//! assert!((n.score.value().unwrap() - 0.925).abs() < 1e-9);
//! ```

pub mod checker;
pub mod eval;
pub mod event;
pub mod log_io;
pub mod model;
pub mod stream;

pub use checker::{
    check_log, CaseScore, CaseState, CheckerConfig, CheckerError, ConformanceNotification,
    NotificationWriter, OnlineChecker, Score,
};
pub use event::{
    project, project_log, Case, Event, EventError, EventLog, MissingPolicy, ProjectedLog,
    StreamEvent, Trace,
};
pub use log_io::{read_csv_log, read_xes_log, write_csv_log, CsvLogSchema, LogIoError};
pub use model::{
    count_directly_follows, normalize_counts, prepare_for_conformance, read_model, write_model,
    AccomplishmentIndex, CountMatrix, DescriptiveModel, ModelError, ModelFile, PreparedModel,
    TransitionMatrix, UnknownPolicy,
};
pub use stream::{replay_log, Rate, ReplayMode, ReplaySchedule, StreamError};

//! Online soft conformance over an event stream.
//!
//! For every case the checker keeps the last accomplishment and the running mean
//! of the transition probabilities seen so far. Each event updates its case in
//! constant time and yields a [`ConformanceNotification`] whose score is the mean
//! divided by the largest attainable probability of the prepared model. At most
//! `capacity` cases are tracked; the least recently updated case is dropped when
//! the bound is exceeded, and a dropped case that shows up again starts over.

mod case_map;
mod notify;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::event::{project_case, EventError, EventLog, MissingPolicy, StreamEvent};
use crate::model::{PreparedModel, TransitionMatrix, UnknownPolicy};

pub use case_map::CaseMap;
pub use notify::{format_notification, NotificationWriter, DEFAULT_BATCH};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckerError {
    #[error("case capacity must be at least 1")]
    ZeroCapacity,
}

/// Last accomplishment of a case, resolved against the model index once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LastAccomplishment {
    Known(usize),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseState {
    pub last_accomplishment: LastAccomplishment,
    pub mean: f64,
    /// Number of transitions seen, i.e. events minus one.
    pub observations: u64,
    /// Logical time of the last update.
    pub last_update: u64,
}

#[derive(Debug, Clone)]
pub struct CheckerConfig {
    pub model: PreparedModel,
    pub capacity: usize,
    pub unknown_policy: UnknownPolicy,
}

impl CheckerConfig {
    pub fn new(model: PreparedModel, capacity: usize) -> Self {
        Self {
            model,
            capacity,
            unknown_policy: UnknownPolicy::default(),
        }
    }

    pub fn with_unknown_policy(mut self, policy: UnknownPolicy) -> Self {
        self.unknown_policy = policy;
        self
    }
}

/// A case score: absent until the case has made its first transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Pending,
    Value(f64),
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Pending => None,
            Score::Value(v) => Some(v),
        }
    }

    pub fn is_pending(self) -> bool {
        matches!(self, Score::Pending)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Pending => f.write_str("pending"),
            Score::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformanceNotification {
    pub case_id: String,
    pub score: Score,
    pub observations: u64,
    pub event_index: u64,
}

/// Single-consumer state machine; calls to `process*` must be totally ordered.
#[derive(Debug, Clone)]
pub struct OnlineChecker {
    model: PreparedModel,
    capacity: usize,
    unknown_policy: UnknownPolicy,
    cases: CaseMap<CaseState>,
    now: u64,
    evictions: u64,
    peak: usize,
}

impl OnlineChecker {
    pub fn new(config: CheckerConfig) -> Result<Self, CheckerError> {
        if config.capacity == 0 {
            return Err(CheckerError::ZeroCapacity);
        }
        Ok(Self {
            cases: CaseMap::with_capacity(config.capacity.saturating_add(1).min(1 << 20)),
            model: config.model,
            capacity: config.capacity,
            unknown_policy: config.unknown_policy,
            now: 0,
            evictions: 0,
            peak: 0,
        })
    }

    pub fn model(&self) -> &PreparedModel {
        &self.model
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of tracked cases.
    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Largest number of tracked cases seen at the end of any event.
    pub fn peak_len(&self) -> usize {
        self.peak
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    pub fn events_processed(&self) -> u64 {
        self.now
    }

    pub fn case(&self, case_id: &str) -> Option<&CaseState> {
        self.cases.get(case_id)
    }

    pub fn process_event(&mut self, event: &StreamEvent) -> ConformanceNotification {
        self.process(&event.case_id, &event.accomplishment, event.arrival_index)
    }

    pub fn process(
        &mut self,
        case_id: &str,
        accomplishment: &str,
        event_index: u64,
    ) -> ConformanceNotification {
        self.now += 1;
        let now = self.now;
        let current = match self.model.index().position(accomplishment) {
            Some(i) => LastAccomplishment::Known(i),
            None => LastAccomplishment::Unknown(accomplishment.to_string()),
        };

        let (score, observations) = match self.cases.touch(case_id, now) {
            None => {
                let state = CaseState {
                    last_accomplishment: current,
                    mean: 0.0,
                    observations: 0,
                    last_update: now,
                };
                self.cases.insert(case_id.to_string(), state, now);
                (Score::Pending, 0)
            }
            Some(state) => {
                let p = match (&state.last_accomplishment, &current) {
                    (LastAccomplishment::Known(i), LastAccomplishment::Known(j)) => {
                        self.model.get(*i, *j)
                    }
                    _ => self.model.unknown_value(self.unknown_policy),
                };
                state.mean += (p - state.mean) / (state.observations + 1) as f64;
                state.observations += 1;
                state.last_accomplishment = current;
                state.last_update = now;
                let score = (state.mean / self.model.denominator()).clamp(0.0, 1.0);
                (Score::Value(score), state.observations)
            }
        };

        while self.cases.len() > self.capacity {
            if let Some((evicted, _, _)) = self.cases.pop_oldest() {
                log::trace!("evicted case {evicted}");
                self.evictions += 1;
            }
        }
        self.peak = self.peak.max(self.cases.len());

        ConformanceNotification {
            case_id: case_id.to_string(),
            score,
            observations,
            event_index,
        }
    }
}

/// Final score of one case after an offline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseScore {
    pub score: Score,
    pub observations: u64,
}

/// Scores every case of a log, as if its traces were streamed one after the
/// other through a checker large enough to never evict.
pub fn check_log(
    model: &PreparedModel,
    log: &EventLog,
    attribute: &str,
    unknown_policy: UnknownPolicy,
) -> Result<BTreeMap<String, CaseScore>, EventError> {
    let config =
        CheckerConfig::new(model.clone(), log.len().max(1)).with_unknown_policy(unknown_policy);
    let mut checker = OnlineChecker::new(config).expect("capacity is at least 1");
    let mut out = BTreeMap::new();
    let mut index = 0u64;
    for case in log {
        let labels = project_case(&case.id, &case.trace, attribute, MissingPolicy::Fail)?;
        let mut last = None;
        for label in labels {
            index += 1;
            last = Some(checker.process(&case.id, label, index));
        }
        if let Some(n) = last {
            out.insert(
                case.id.clone(),
                CaseScore {
                    score: n.score,
                    observations: n.observations,
                },
            );
        }
    }
    Ok(out)
}

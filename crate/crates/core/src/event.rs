//! Events, traces, logs and the projection operator.
//!
//! An [`Event`] is a finite attribute map. Events of one process instance form a
//! [`Trace`], and an [`EventLog`] is the collection of all cases. Because several
//! cases can carry identical traces, the log also behaves as a multiset of traces
//! (see [`EventLog::multiset`]).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventError {
    #[error("attribute name must not be empty")]
    EmptyAttributeName,
    #[error("attribute `{0}` has an empty value")]
    EmptyAttributeValue(String),
    #[error("a trace must contain at least one event")]
    EmptyTrace,
    #[error("case id must not be empty")]
    EmptyCaseId,
    #[error("duplicate case id `{0}`")]
    DuplicateCase(String),
    #[error("case `{case}`: event {event} (1-based) has no attribute `{attribute}`")]
    MissingAttribute {
        case: String,
        /// 1-based position of the offending event in its trace.
        event: usize,
        attribute: String,
    },
}

/// What to do when an event lacks the attribute being projected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Abort with the index of the offending event.
    #[default]
    Fail,
    /// Drop the event from the projection.
    Skip,
}

/// A key-value event. Names are unique, values are never empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    attributes: BTreeMap<String, String>,
}

impl Event {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an event from `(name, value)` pairs; later duplicates overwrite earlier ones.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, EventError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut event = Event::new();
        for (k, v) in pairs {
            event.insert(k, v)?;
        }
        Ok(event)
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<Option<String>, EventError> {
        let name = name.into();
        let value = value.into();
        if name.is_empty() {
            return Err(EventError::EmptyAttributeName);
        }
        if value.is_empty() {
            return Err(EventError::EmptyAttributeValue(name));
        }
        Ok(self.attributes.insert(name, value))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }
}

/// A non-empty sequence of events, kept in ingestion order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trace {
    events: Vec<Event>,
}

impl Trace {
    pub fn new(events: Vec<Event>) -> Result<Self, EventError> {
        if events.is_empty() {
            return Err(EventError::EmptyTrace);
        }
        Ok(Self { events })
    }

    /// Convenience constructor: one event per label, each holding only `attribute`.
    pub fn from_labels<S: AsRef<str>>(attribute: &str, labels: &[S]) -> Result<Self, EventError> {
        let events = labels
            .iter()
            .map(|l| Event::from_pairs([(attribute, l.as_ref())]))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(events)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

/// One process instance: a case id and its trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub id: String,
    pub trace: Trace,
}

/// All cases of a log, in ingestion order. Case ids are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    cases: Vec<Case>,
    ids: HashSet<String>,
}

/// A projected log: distinct label sequences with their multiplicities.
pub type ProjectedLog = BTreeMap<Vec<String>, usize>;

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, trace: Trace) -> Result<(), EventError> {
        let id = id.into();
        if id.is_empty() {
            return Err(EventError::EmptyCaseId);
        }
        if !self.ids.insert(id.clone()) {
            return Err(EventError::DuplicateCase(id));
        }
        self.cases.push(Case { id, trace });
        Ok(())
    }

    /// Builds a log from `(trace, multiplicity)` pairs. Every copy becomes its own
    /// case, named `c1`, `c2`, ... in iteration order.
    pub fn from_variants<I>(variants: I) -> Self
    where
        I: IntoIterator<Item = (Trace, usize)>,
    {
        let mut log = EventLog::new();
        let mut next = 1usize;
        for (trace, multiplicity) in variants {
            for _ in 0..multiplicity {
                log.push(format!("c{next}"), trace.clone())
                    .expect("synthetic case ids are unique");
                next += 1;
            }
        }
        log
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.cases.iter().map(|c| c.trace.len()).sum()
    }

    /// Distinct traces with their (strictly positive) multiplicities.
    pub fn multiset(&self) -> BTreeMap<&Trace, usize> {
        let mut out = BTreeMap::new();
        for case in &self.cases {
            *out.entry(&case.trace).or_insert(0) += 1;
        }
        out
    }

    /// Every distinct attribute name used by any event.
    pub fn attribute_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .cases
            .iter()
            .flat_map(|c| c.trace.events())
            .flat_map(|e| e.attributes().keys().map(String::as_str))
            .collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a Case;
    type IntoIter = std::slice::Iter<'a, Case>;

    fn into_iter(self) -> Self::IntoIter {
        self.cases.iter()
    }
}

/// Projects a trace onto one attribute.
pub fn project<'t>(
    trace: &'t Trace,
    attribute: &str,
    policy: MissingPolicy,
) -> Result<Vec<&'t str>, EventError> {
    project_case("", trace, attribute, policy)
}

pub(crate) fn project_case<'t>(
    case: &str,
    trace: &'t Trace,
    attribute: &str,
    policy: MissingPolicy,
) -> Result<Vec<&'t str>, EventError> {
    if attribute.is_empty() {
        return Err(EventError::EmptyAttributeName);
    }
    let mut out = Vec::with_capacity(trace.len());
    for (i, event) in trace.events().iter().enumerate() {
        match (event.get(attribute), policy) {
            (Some(v), _) => out.push(v),
            (None, MissingPolicy::Skip) => {}
            (None, MissingPolicy::Fail) => {
                return Err(EventError::MissingAttribute {
                    case: case.to_string(),
                    event: i + 1,
                    attribute: attribute.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Projects every case of `log` and merges equal sequences into one entry.
///
/// Under [`MissingPolicy::Skip`] a trace whose events all lack the attribute
/// projects to the empty sequence, which is kept.
pub fn project_log(
    log: &EventLog,
    attribute: &str,
    policy: MissingPolicy,
) -> Result<ProjectedLog, EventError> {
    let mut out = ProjectedLog::new();
    for case in log {
        let seq = project_case(&case.id, &case.trace, attribute, policy)?;
        let seq = seq.into_iter().map(str::to_string).collect();
        *out.entry(seq).or_insert(0) += 1;
    }
    Ok(out)
}

/// An element of an event stream: which case did what, and when it arrived.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamEvent {
    pub case_id: String,
    pub accomplishment: String,
    /// 1-based position in the stream.
    pub arrival_index: u64,
}

impl StreamEvent {
    pub fn new(
        case_id: impl Into<String>,
        accomplishment: impl Into<String>,
        arrival_index: u64,
    ) -> Self {
        Self {
            case_id: case_id.into(),
            accomplishment: accomplishment.into(),
            arrival_index,
        }
    }
}

impl fmt::Display for StreamEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.case_id, self.accomplishment)
    }
}

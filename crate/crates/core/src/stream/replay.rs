use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Rate, StreamError};
use crate::event::{project_case, EventError, EventLog, MissingPolicy, StreamEvent};

/// How traces of a log are intertwined into one stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayMode {
    /// One event from each unfinished case in turn.
    #[default]
    RoundRobin,
    /// A uniformly random interleaving, reproducible from the seed.
    Shuffle(u64),
    /// Case after case, the offline-equivalent order.
    Sequential,
}

impl FromStr for ReplayMode {
    type Err = StreamError;

    /// Accepts `round-robin`, `sequential`, `shuffle:<seed>` and `shuffle(<seed>)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StreamError::InvalidSchedule(s.to_string());
        match s {
            "round-robin" => Ok(ReplayMode::RoundRobin),
            "sequential" => Ok(ReplayMode::Sequential),
            _ => {
                let seed = s
                    .strip_prefix("shuffle:")
                    .or_else(|| s.strip_prefix("shuffle(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(bad)?;
                seed.parse().map(ReplayMode::Shuffle).map_err(|_| bad())
            }
        }
    }
}

impl fmt::Display for ReplayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayMode::RoundRobin => f.write_str("round-robin"),
            ReplayMode::Shuffle(seed) => write!(f, "shuffle:{seed}"),
            ReplayMode::Sequential => f.write_str("sequential"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplaySchedule {
    pub mode: ReplayMode,
    /// Used by emitters; the replayed sequence itself does not depend on it.
    pub rate: Rate,
}

impl ReplaySchedule {
    pub fn new(mode: ReplayMode) -> Self {
        Self {
            mode,
            rate: Rate::Unthrottled,
        }
    }
}

/// Turns a log into a stream: every event exactly once, per-case order kept,
/// arrival indices `1..=n`.
pub fn replay_log(
    log: &EventLog,
    attribute: &str,
    schedule: &ReplaySchedule,
) -> Result<Vec<StreamEvent>, EventError> {
    let projected: Vec<(&str, Vec<&str>)> = log
        .cases()
        .iter()
        .map(|c| {
            Ok((
                c.id.as_str(),
                project_case(&c.id, &c.trace, attribute, MissingPolicy::Fail)?,
            ))
        })
        .collect::<Result<_, EventError>>()?;
    let total: usize = projected.iter().map(|(_, s)| s.len()).sum();

    let order: Vec<usize> = match schedule.mode {
        ReplayMode::Sequential => projected
            .iter()
            .enumerate()
            .flat_map(|(i, (_, s))| std::iter::repeat_n(i, s.len()))
            .collect(),
        ReplayMode::RoundRobin => {
            let longest = projected.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
            (0..longest)
                .flat_map(|k| {
                    projected
                        .iter()
                        .enumerate()
                        .filter(move |(_, (_, s))| k < s.len())
                        .map(|(i, _)| i)
                })
                .collect()
        }
        ReplayMode::Shuffle(seed) => {
            // shuffling the multiset of case slots is uniform over interleavings
            let mut slots: Vec<usize> = projected
                .iter()
                .enumerate()
                .flat_map(|(i, (_, s))| std::iter::repeat_n(i, s.len()))
                .collect();
            slots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            slots
        }
    };

    let mut cursor = vec![0usize; projected.len()];
    let mut out = Vec::with_capacity(total);
    for (k, case) in order.into_iter().enumerate() {
        let (id, seq) = &projected[case];
        out.push(StreamEvent::new(*id, seq[cursor[case]], k as u64 + 1));
        cursor[case] += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Trace;

    fn two_traces() -> EventLog {
        let mut log = EventLog::new();
        log.push("c1", Trace::from_labels("a", &["A", "B"]).unwrap())
            .unwrap();
        log.push("c2", Trace::from_labels("a", &["X", "Y"]).unwrap())
            .unwrap();
        log
    }

    fn pairs(events: &[StreamEvent]) -> Vec<(&str, &str)> {
        events
            .iter()
            .map(|e| (e.case_id.as_str(), e.accomplishment.as_str()))
            .collect()
    }

    #[test]
    fn round_robin_alternates() {
        let ev = replay_log(
            &two_traces(),
            "a",
            &ReplaySchedule::new(ReplayMode::RoundRobin),
        )
        .unwrap();
        assert_eq!(
            pairs(&ev),
            [("c1", "A"), ("c2", "X"), ("c1", "B"), ("c2", "Y")]
        );
        assert_eq!(
            ev.iter().map(|e| e.arrival_index).collect::<Vec<_>>(),
            [1, 2, 3, 4]
        );
    }

    #[test]
    fn sequential_is_trace_by_trace() {
        let ev = replay_log(
            &two_traces(),
            "a",
            &ReplaySchedule::new(ReplayMode::Sequential),
        )
        .unwrap();
        assert_eq!(
            pairs(&ev),
            [("c1", "A"), ("c1", "B"), ("c2", "X"), ("c2", "Y")]
        );
    }

    #[test]
    fn shuffle_is_reproducible() {
        let s = ReplaySchedule::new(ReplayMode::Shuffle(7));
        let a = replay_log(&two_traces(), "a", &s).unwrap();
        let b = replay_log(&two_traces(), "a", &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "shuffle:7".parse::<ReplayMode>().unwrap(),
            ReplayMode::Shuffle(7)
        );
        assert_eq!(
            "shuffle(7)".parse::<ReplayMode>().unwrap(),
            ReplayMode::Shuffle(7)
        );
        assert_eq!(
            "round-robin".parse::<ReplayMode>().unwrap(),
            ReplayMode::RoundRobin
        );
        assert!("shuffle:x".parse::<ReplayMode>().is_err());
        assert_eq!(ReplayMode::Shuffle(3).to_string(), "shuffle:3");
    }

    #[test]
    fn projection_failure_propagates() {
        assert!(replay_log(&two_traces(), "b", &ReplaySchedule::default()).is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::event::{Event, EventLog, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Swap an event with its successor.
    SwapAdjacent,
    /// Replace the label with one drawn uniformly from the log's alphabet.
    SubstituteLabel,
    /// Insert an event carrying a uniformly drawn label before the event.
    InsertLabel,
}

impl FromStr for NoiseKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "swap-adjacent" => Ok(NoiseKind::SwapAdjacent),
            "substitute-label" => Ok(NoiseKind::SubstituteLabel),
            "insert-label" => Ok(NoiseKind::InsertLabel),
            other => Err(EvalError::InvalidNoiseKind(other.to_string())),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::SwapAdjacent => "swap-adjacent",
            NoiseKind::SubstituteLabel => "substitute-label",
            NoiseKind::InsertLabel => "insert-label",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Probability that any single event is affected.
    pub intensity: f64,
    pub seed: u64,
}

/// Perturbs every case independently; each event is hit with probability
/// `intensity`. Case ids are kept.
pub fn inject_noise(
    log: &EventLog,
    attribute: &str,
    spec: &NoiseSpec,
) -> Result<EventLog, EvalError> {
    if !(0.0..=1.0).contains(&spec.intensity) {
        return Err(EvalError::IntensityOutOfRange(spec.intensity));
    }
    let mut alphabet: Vec<&str> = log
        .cases()
        .iter()
        .flat_map(|c| c.trace.events())
        .filter_map(|e| e.get(attribute))
        .collect();
    alphabet.sort_unstable();
    alphabet.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = EventLog::new();
    for case in log {
        let mut events: Vec<Event> = case.trace.events().to_vec();
        match spec.kind {
            NoiseKind::SwapAdjacent => {
                let mut k = 0;
                while k + 1 < events.len() {
                    if rng.random::<f64>() < spec.intensity {
                        events.swap(k, k + 1);
                        k += 2;
                    } else {
                        k += 1;
                    }
                }
            }
            NoiseKind::SubstituteLabel => {
                for e in events.iter_mut() {
                    if rng.random::<f64>() < spec.intensity && e.get(attribute).is_some() {
                        let label = alphabet[rng.random_range(0..alphabet.len())];
                        e.insert(attribute, label).expect("labels are non-empty");
                    }
                }
            }
            NoiseKind::InsertLabel => {
                let mut noisy = Vec::with_capacity(events.len() * 2);
                for e in events {
                    if !alphabet.is_empty() && rng.random::<f64>() < spec.intensity {
                        let label = alphabet[rng.random_range(0..alphabet.len())];
                        noisy.push(Event::from_pairs([(attribute, label)]).expect("non-empty"));
                    }
                    noisy.push(e);
                }
                events = noisy;
            }
        }
        out.push(
            case.id.clone(),
            Trace::new(events).expect("noise never empties a trace"),
        )
        .expect("ids come from a valid log");
    }
    Ok(out)
}

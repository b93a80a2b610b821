//! Shared fixtures for the criterion benches.

use softconform::eval::synthetic::{process_like_model, sample_log, SyntheticStream};
use softconform::{prepare_for_conformance, EventLog, PreparedModel, StreamEvent};

/// Prepared model over `activities` process-shaped labels, alpha 0.8.
pub fn model(activities: usize) -> PreparedModel {
    prepare_for_conformance(&process_like_model(activities, 1), 0.8).expect("alpha in range")
}

/// `n` intertwined events with `concurrency` open cases.
pub fn stream(model: &PreparedModel, n: usize, concurrency: usize) -> Vec<StreamEvent> {
    SyntheticStream::new(model.clone(), concurrency, 40, 7)
        .take(n)
        .collect()
}

pub fn log(model: &PreparedModel, traces: usize) -> EventLog {
    sample_log(model, "name", traces, 40, 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let m = model(20);
        assert_eq!(stream(&m, 500, 50), stream(&m, 500, 50));
        assert_eq!(log(&m, 10), log(&m, 10));
    }
}

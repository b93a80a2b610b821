use std::collections::HashMap;

use proptest::prelude::*;
use softconform::model::EPSILON;
use softconform::{
    count_directly_follows, normalize_counts, prepare_for_conformance, EventLog, Trace,
    TransitionMatrix,
};

/// Brute force: every adjacent pair of every case, counted by label.
fn oracle_counts(traces: &[Vec<String>]) -> HashMap<(String, String), u64> {
    let mut out = HashMap::new();
    for t in traces {
        for k in 0..t.len().saturating_sub(1) {
            *out.entry((t[k].clone(), t[k + 1].clone())).or_insert(0) += 1;
        }
    }
    out
}

fn to_log(traces: &[Vec<String>]) -> EventLog {
    EventLog::from_variants(
        traces
            .iter()
            .map(|t| (Trace::from_labels("name", t).unwrap(), 1))
            .collect::<Vec<_>>(),
    )
}

fn traces_strategy(max_labels: u8, max_traces: usize) -> impl Strategy<Value = Vec<Vec<String>>> {
    let label = (0..max_labels).prop_map(|i| format!("L{i}"));
    proptest::collection::vec(proptest::collection::vec(label, 1..8), 1..max_traces)
}

proptest! {
    #[test]
    fn counts_match_brute_force(traces in traces_strategy(8, 100)) {
        let df = count_directly_follows(&to_log(&traces), "name").unwrap();
        let oracle = oracle_counts(&traces);
        let labels = df.index().labels().to_vec();
        for a in &labels {
            for b in &labels {
                let want = oracle.get(&(a.clone(), b.clone())).copied().unwrap_or(0);
                prop_assert_eq!(df.count(a, b), want);
            }
        }
        let mass: u64 = traces.iter().map(|t| t.len() as u64 - 1).sum();
        prop_assert_eq!(df.total(), mass);
        let mut seen: Vec<&String> = traces.iter().flatten().collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(labels.iter().collect::<Vec<_>>(), seen);
    }

    #[test]
    fn normalized_rows_sum_to_zero_or_one(traces in traces_strategy(8, 100)) {
        let p = normalize_counts(&count_directly_follows(&to_log(&traces), "name").unwrap());
        let n = p.index().len();
        for i in 0..n {
            let s: f64 = p.row(i).iter().sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < EPSILON, "row {} sums to {}", i, s);
        }
    }

    #[test]
    fn prepare_is_linear_in_alpha(traces in traces_strategy(6, 40), alpha in 0.0f64..=1.0) {
        let p = normalize_counts(&count_directly_follows(&to_log(&traces), "name").unwrap());
        let s = prepare_for_conformance(&p, alpha).unwrap();
        let s1 = prepare_for_conformance(&p, 1.0).unwrap();
        let s0 = prepare_for_conformance(&p, 0.0).unwrap();
        let n = p.index().len() as f64;
        for k in 0..s.probabilities().len() {
            let v = s.probabilities()[k];
            prop_assert!((v - (alpha * s1.probabilities()[k] + (1.0 - alpha) * s0.probabilities()[k])).abs() < 1e-12);
            prop_assert!((v - (alpha * p.probabilities()[k] + (1.0 - alpha) / n)).abs() < 1e-12);
            prop_assert!(v <= s.denominator() + EPSILON);
        }
        for i in 0..p.index().len() {
            let ps: f64 = p.row(i).iter().sum();
            let ss: f64 = s.row(i).iter().sum();
            prop_assert!((ss - (alpha * ps + 1.0 - alpha)).abs() < EPSILON);
        }
        prop_assert!(s.denominator() > 0.0 && s.denominator() <= 1.0);
    }

    #[test]
    fn merge_is_monotone_in_alpha(traces in traces_strategy(6, 40), a in 0.0f64..1.0, gap in 0.01f64..0.5) {
        let p = normalize_counts(&count_directly_follows(&to_log(&traces), "name").unwrap());
        let hi = (a + gap).min(1.0);
        let s_lo = prepare_for_conformance(&p, a).unwrap();
        let s_hi = prepare_for_conformance(&p, hi).unwrap();
        let n = p.index().len() as f64;
        for k in 0..p.probabilities().len() {
            let pk = p.probabilities()[k];
            if pk > 1.0 / n {
                prop_assert!(s_lo.probabilities()[k] < s_hi.probabilities()[k]);
            } else if pk == 0.0 {
                prop_assert!(s_lo.probabilities()[k] > s_hi.probabilities()[k]);
            }
        }
    }
}

#[test]
fn fifty_random_traces_match_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
    let traces: Vec<Vec<String>> = (0..50)
        .map(|_| {
            let len = rng.random_range(1..6);
            (0..len)
                .map(|_| format!("x{}", rng.random_range(0..5)))
                .collect()
        })
        .collect();
    let df = count_directly_follows(&to_log(&traces), "name").unwrap();
    for ((a, b), n) in oracle_counts(&traces) {
        assert_eq!(df.count(&a, &b), n);
    }
}

#[test]
fn running_example_merge() {
    let log = EventLog::from_variants([
        (Trace::from_labels("name", &["A", "B", "C"]).unwrap(), 3),
        (
            Trace::from_labels("name", &["A", "A", "B", "C"]).unwrap(),
            1,
        ),
    ]);
    let p = normalize_counts(&count_directly_follows(&log, "name").unwrap());
    let s = prepare_for_conformance(&p, 0.5).unwrap();
    // two-decimal reference values
    let printed = [0.26, 0.57, 0.17, 0.17, 0.17, 0.66, 0.17, 0.17, 0.17];
    let exact = [
        0.1 + 1.0 / 6.0,
        0.4 + 1.0 / 6.0,
        1.0 / 6.0,
        1.0 / 6.0,
        1.0 / 6.0,
        0.5 + 1.0 / 6.0,
        1.0 / 6.0,
        1.0 / 6.0,
        1.0 / 6.0,
    ];
    for k in 0..9 {
        assert!((s.probabilities()[k] - printed[k]).abs() < 0.01);
        assert!((s.probabilities()[k] - exact[k]).abs() < 1e-9);
    }
    assert!((s.denominator() - 2.0 / 3.0).abs() < 1e-15);
}

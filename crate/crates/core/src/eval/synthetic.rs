//! Synthetic models, logs and streams for experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::event::{EventLog, StreamEvent, Trace};
use crate::model::{
    normalize_counts, AccomplishmentIndex, CountMatrix, DescriptiveModel, TransitionMatrix,
};

/// A process-shaped model over `activities` labels `a01, a02, ...`: a main path
/// with optional skips, occasional rework loops and a terminal last activity.
pub fn process_like_model(activities: usize, seed: u64) -> DescriptiveModel {
    let n = activities.max(1);
    let width = n.to_string().len().max(2);
    let labels: Vec<String> = (1..=n).map(|i| format!("a{i:0width$}")).collect();
    let index = AccomplishmentIndex::from_sorted(labels).expect("generated labels are sorted");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n * n];
    for i in 0..n.saturating_sub(1) {
        counts[i * n + i + 1] = rng.random_range(5..20);
        if i + 2 < n && rng.random_bool(0.4) {
            counts[i * n + i + 2] = rng.random_range(1..6);
        }
        if i > 0 && rng.random_bool(0.2) {
            counts[i * n + i - 1] = rng.random_range(1..4);
        }
        if i + 4 < n && rng.random_bool(0.15) {
            let far = rng.random_range(i + 3..n);
            counts[i * n + far] += rng.random_range(1..3);
        }
    }
    normalize_counts(&CountMatrix::from_parts(index, counts).expect("n x n"))
}

/// Walks the matrix from `start`. A row's missing mass is the chance to stop;
/// the walk is also cut at `max_len` labels.
pub fn random_walk<M, R>(model: &M, start: usize, max_len: usize, rng: &mut R) -> Vec<usize>
where
    M: TransitionMatrix + ?Sized,
    R: Rng + ?Sized,
{
    let mut walk = vec![start];
    let mut current = start;
    while walk.len() < max_len {
        match step(model, current, rng) {
            Some(next) => {
                walk.push(next);
                current = next;
            }
            None => break,
        }
    }
    walk
}

fn step<M, R>(model: &M, from: usize, rng: &mut R) -> Option<usize>
where
    M: TransitionMatrix + ?Sized,
    R: Rng + ?Sized,
{
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &p) in model.row(from).iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(j);
        }
    }
    None
}

/// Samples `traces` random walks starting at label 0, each its own case
/// (`c1`, `c2`, ...), with labels stored under `attribute`.
pub fn sample_log<M>(
    model: &M,
    attribute: &str,
    traces: usize,
    max_len: usize,
    seed: u64,
) -> EventLog
where
    M: TransitionMatrix + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = model.index();
    let variants = (0..traces).map(|_| {
        let walk = random_walk(model, 0, max_len.max(1), &mut rng);
        let labels: Vec<&str> = walk.iter().map(|&i| index.label(i)).collect();
        (
            Trace::from_labels(attribute, &labels).expect("labels are non-empty"),
            1,
        )
    });
    EventLog::from_variants(variants.collect::<Vec<_>>())
}

struct ActiveCase {
    id: String,
    current: usize,
    emitted: usize,
}

/// Endless stream of intertwined cases, each a random walk over a model.
///
/// `concurrency` cases are open at any time; every event belongs to a uniformly
/// chosen open case, and a finished case is replaced by a fresh one.
pub struct SyntheticStream<M> {
    model: M,
    rng: ChaCha8Rng,
    open: Vec<ActiveCase>,
    next_case: u64,
    next_index: u64,
    max_len: usize,
}

impl<M: TransitionMatrix> SyntheticStream<M> {
    pub fn new(model: M, concurrency: usize, max_len: usize, seed: u64) -> Self {
        let mut s = Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            open: Vec::with_capacity(concurrency.max(1)),
            next_case: 0,
            next_index: 1,
            max_len: max_len.max(1),
        };
        for _ in 0..concurrency.max(1) {
            let case = s.fresh_case();
            s.open.push(case);
        }
        s
    }

    fn fresh_case(&mut self) -> ActiveCase {
        self.next_case += 1;
        ActiveCase {
            id: format!("s{}", self.next_case),
            current: 0,
            emitted: 0,
        }
    }
}

impl<M: TransitionMatrix> Iterator for SyntheticStream<M> {
    type Item = StreamEvent;

    fn next(&mut self) -> Option<StreamEvent> {
        let slot = self.rng.random_range(0..self.open.len());
        if self.open[slot].emitted > 0 {
            let from = self.open[slot].current;
            let next = if self.open[slot].emitted < self.max_len {
                step(&self.model, from, &mut self.rng)
            } else {
                None
            };
            match next {
                Some(j) => self.open[slot].current = j,
                None => self.open[slot] = self.fresh_case(),
            }
        }
        let case = &mut self.open[slot];
        case.emitted += 1;
        let ev = StreamEvent::new(
            case.id.clone(),
            self.model.index().label(case.current),
            self.next_index,
        );
        self.next_index += 1;
        Some(ev)
    }
}

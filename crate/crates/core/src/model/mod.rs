//! Directly-follows counting, row normalization and flower-model merging.
//!
//! The pipeline is `EventLog -> CountMatrix -> DescriptiveModel -> PreparedModel`.
//! All matrices are dense and row-major over an [`AccomplishmentIndex`].

mod file;

use std::collections::HashMap;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::event::{project_case, EventError, EventLog, MissingPolicy};

pub use file::{read_model, read_model_from, write_model, write_model_to, ModelFile, MODEL_HEADER};

/// Numerical slack for row-sum and range checks.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("cannot build a model from an empty log")]
    EmptyLog,
    #[error("a model needs at least one accomplishment")]
    NoAccomplishments,
    #[error("duplicate accomplishment label `{0}`")]
    DuplicateLabel(String),
    #[error("label `{0}` cannot be serialized (contains a comma or line break)")]
    UnserializableLabel(String),
    #[error("{labels} labels but the matrix has {rows} rows and {cells} entries")]
    DimensionMismatch {
        labels: usize,
        rows: usize,
        cells: usize,
    },
    #[error("invariant violated at row {row}: {message}")]
    InvariantViolation { row: usize, message: String },
    #[error("unsupported model format `{0}`")]
    VersionMismatch(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Projection(#[from] EventError),
}

/// Distinct accomplishment labels in lexicographic order; a label's position is
/// its row/column in every matrix built over this index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccomplishmentIndex {
    labels: Vec<String>,
    positions: HashMap<String, usize>,
}

impl AccomplishmentIndex {
    /// Sorts and deduplicates the given labels.
    pub fn from_labels<I, S>(labels: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort_unstable();
        labels.dedup();
        Self::from_sorted(labels)
    }

    /// Accepts labels that are already canonical (strictly increasing).
    pub fn from_sorted(labels: Vec<String>) -> Result<Self, ModelError> {
        if labels.is_empty() {
            return Err(ModelError::NoAccomplishments);
        }
        for pair in labels.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateLabel(pair[0].clone()));
            }
            if pair[0] > pair[1] {
                return Err(ModelError::InvariantViolation {
                    row: 0,
                    message: format!("labels not in lexicographic order at `{}`", pair[1]),
                });
            }
        }
        let positions = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Self { labels, positions })
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.positions.get(label).copied()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false: an index holds at least one label.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Read access shared by probability matrices.
pub trait TransitionMatrix {
    fn index(&self) -> &AccomplishmentIndex;

    /// Row-major `n x n` entries.
    fn probabilities(&self) -> &[f64];

    fn get(&self, from: usize, to: usize) -> f64 {
        self.probabilities()[from * self.index().len() + to]
    }

    fn row(&self, from: usize) -> &[f64] {
        let n = self.index().len();
        &self.probabilities()[from * n..(from + 1) * n]
    }
}

/// Weighted directly-follows frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    index: AccomplishmentIndex,
    counts: Vec<u64>,
}

impl CountMatrix {
    pub fn from_parts(index: AccomplishmentIndex, counts: Vec<u64>) -> Result<Self, ModelError> {
        let n = index.len();
        if counts.len() != n * n {
            return Err(ModelError::DimensionMismatch {
                labels: n,
                rows: counts.len() / n.max(1),
                cells: counts.len(),
            });
        }
        Ok(Self { index, counts })
    }

    pub fn index(&self) -> &AccomplishmentIndex {
        &self.index
    }

    pub fn get(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.index.len() + to]
    }

    /// Count for a labelled pair; 0 when either label is unknown.
    pub fn count(&self, from: &str, to: &str) -> u64 {
        match (self.index.position(from), self.index.position(to)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => 0,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts direct successions of `attribute` values across all cases.
///
/// Every event must carry the attribute. Identical traces contribute once per
/// case, so the counts are weighted by trace multiplicity. Projecting on
/// `originator` yields handover-of-work counts.
pub fn count_directly_follows(log: &EventLog, attribute: &str) -> Result<CountMatrix, ModelError> {
    if log.is_empty() {
        return Err(ModelError::EmptyLog);
    }
    let mut sequences = Vec::with_capacity(log.len());
    for case in log {
        sequences.push(project_case(
            &case.id,
            &case.trace,
            attribute,
            MissingPolicy::Fail,
        )?);
    }
    let index = AccomplishmentIndex::from_labels(sequences.iter().flatten().copied())?;
    let n = index.len();
    let mut counts = vec![0u64; n * n];
    for seq in &sequences {
        let positions: Vec<usize> = seq
            .iter()
            .map(|l| index.position(l).expect("indexed above"))
            .collect();
        for pair in positions.windows(2) {
            counts[pair[0] * n + pair[1]] += 1;
        }
    }
    CountMatrix::from_parts(index, counts)
}

/// A row-normalized, sub-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveModel {
    index: AccomplishmentIndex,
    probs: Vec<f64>,
}

impl DescriptiveModel {
    /// Checks that entries lie in `[0, 1]` and rows sum to at most `1 + EPSILON`.
    pub fn from_parts(index: AccomplishmentIndex, probs: Vec<f64>) -> Result<Self, ModelError> {
        check_dimensions(&index, &probs)?;
        let n = index.len();
        for (row, values) in probs.chunks(n).enumerate() {
            check_row(row, values, 0.0, 1.0)?;
        }
        Ok(Self { index, probs })
    }

    pub fn probability(&self, from: &str, to: &str) -> Option<f64> {
        Some(self.get(self.index.position(from)?, self.index.position(to)?))
    }
}

impl TransitionMatrix for DescriptiveModel {
    fn index(&self) -> &AccomplishmentIndex {
        &self.index
    }

    fn probabilities(&self) -> &[f64] {
        &self.probs
    }
}

/// Divides every row by its total. Rows without outgoing observations stay zero.
pub fn normalize_counts(counts: &CountMatrix) -> DescriptiveModel {
    let n = counts.index.len();
    let mut probs = vec![0.0; n * n];
    for (row, out) in counts.counts.chunks(n).zip(probs.chunks_mut(n)) {
        let total: u64 = row.iter().sum();
        if total > 0 {
            for (c, p) in row.iter().zip(out.iter_mut()) {
                *p = *c as f64 / total as f64;
            }
        }
    }
    DescriptiveModel {
        index: counts.index.clone(),
        probs,
    }
}

/// What a lookup returns when either label is missing from the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnknownPolicy {
    /// Unseen accomplishments count as probability 0.
    #[default]
    Zero,
    /// Unseen accomplishments get the flower-model floor `(1 - alpha) / |A|`.
    UniformFloor,
}

/// `S = alpha * P + (1 - alpha) * U` where `U` is uniform `1 / |A|`, plus the
/// largest value an entry of `S` can take, used to normalize scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedModel {
    index: AccomplishmentIndex,
    probs: Vec<f64>,
    alpha: f64,
    floor: f64,
    denominator: f64,
}

fn check_alpha(alpha: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(ModelError::AlphaOutOfRange(alpha))
    }
}

/// Merges a descriptive model with the uniform flower model.
pub fn prepare_for_conformance(
    model: &DescriptiveModel,
    alpha: f64,
) -> Result<PreparedModel, ModelError> {
    check_alpha(alpha)?;
    let n = model.index.len();
    let floor = (1.0 - alpha) / n as f64;
    let probs = model.probs.iter().map(|p| alpha * p + floor).collect();
    Ok(PreparedModel {
        index: model.index.clone(),
        probs,
        alpha,
        floor,
        denominator: alpha + floor,
    })
}

impl PreparedModel {
    /// Rebuilds a prepared model from stored parts, checking every entry lies in
    /// `[floor, denominator]` and every row sum in `[1 - alpha, 1]` (within `EPSILON`).
    pub fn from_parts(
        index: AccomplishmentIndex,
        probs: Vec<f64>,
        alpha: f64,
    ) -> Result<Self, ModelError> {
        check_alpha(alpha)?;
        check_dimensions(&index, &probs)?;
        let n = index.len();
        let floor = (1.0 - alpha) / n as f64;
        let denominator = alpha + floor;
        for (row, values) in probs.chunks(n).enumerate() {
            check_row(row, values, floor, denominator)?;
            let sum: f64 = values.iter().sum();
            if sum < 1.0 - alpha - EPSILON {
                return Err(ModelError::InvariantViolation {
                    row,
                    message: format!("row sum {sum} below 1 - alpha = {}", 1.0 - alpha),
                });
            }
        }
        Ok(Self {
            index,
            probs,
            alpha,
            floor,
            denominator,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `alpha + (1 - alpha) / |A|`: the entry a certain (`P = 1`) transition gets.
    pub fn denominator(&self) -> f64 {
        self.denominator
    }

    /// `(1 - alpha) / |A|`: the entry an unobserved transition gets.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Transition probability, resolving unknown labels with `policy`.
    pub fn lookup(&self, from: &str, to: &str, policy: UnknownPolicy) -> f64 {
        match (self.index.position(from), self.index.position(to)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => self.unknown_value(policy),
        }
    }

    pub(crate) fn unknown_value(&self, policy: UnknownPolicy) -> f64 {
        match policy {
            UnknownPolicy::Zero => 0.0,
            UnknownPolicy::UniformFloor => self.floor,
        }
    }
}

impl TransitionMatrix for PreparedModel {
    fn index(&self) -> &AccomplishmentIndex {
        &self.index
    }

    fn probabilities(&self) -> &[f64] {
        &self.probs
    }
}

fn check_dimensions(index: &AccomplishmentIndex, probs: &[f64]) -> Result<(), ModelError> {
    let n = index.len();
    if probs.len() != n * n {
        return Err(ModelError::DimensionMismatch {
            labels: n,
            rows: probs.len() / n,
            cells: probs.len(),
        });
    }
    Ok(())
}

fn check_row(row: usize, values: &[f64], low: f64, high: f64) -> Result<(), ModelError> {
    for (col, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < low - EPSILON || v > high + EPSILON {
            return Err(ModelError::InvariantViolation {
                row,
                message: format!("entry {col} = {v} outside [{low}, {high}]"),
            });
        }
    }
    let sum: f64 = values.iter().sum();
    if sum > 1.0 + EPSILON {
        return Err(ModelError::InvariantViolation {
            row,
            message: format!("row sum {sum} exceeds 1"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Trace;

    fn running_example() -> EventLog {
        EventLog::from_variants([
            (Trace::from_labels("name", &["A", "B", "C"]).unwrap(), 3),
            (
                Trace::from_labels("name", &["A", "A", "B", "C"]).unwrap(),
                1,
            ),
        ])
    }

    #[test]
    fn running_example_counts() {
        let df = count_directly_follows(&running_example(), "name").unwrap();
        assert_eq!(df.index().labels(), ["A", "B", "C"]);
        assert_eq!(df.counts(), &[1, 4, 0, 0, 0, 4, 0, 0, 0]);
        assert_eq!(df.total(), 9);
    }

    #[test]
    fn single_event_trace_gives_zero_matrix() {
        let log = EventLog::from_variants([(Trace::from_labels("name", &["X"]).unwrap(), 1)]);
        let df = count_directly_follows(&log, "name").unwrap();
        assert_eq!(df.counts(), &[0]);
        let p = normalize_counts(&df);
        assert_eq!(p.probabilities(), &[0.0]);
    }

    #[test]
    fn empty_log_and_missing_attribute() {
        assert!(matches!(
            count_directly_follows(&EventLog::new(), "name"),
            Err(ModelError::EmptyLog)
        ));
        assert!(matches!(
            count_directly_follows(&running_example(), "originator"),
            Err(ModelError::Projection(EventError::MissingAttribute {
                event: 1,
                ..
            }))
        ));
    }

    #[test]
    fn running_example_normalized() {
        let p = normalize_counts(&count_directly_follows(&running_example(), "name").unwrap());
        let expected = [0.2, 0.8, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        for (a, b) in p.probabilities().iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn prepare_extremes_are_exact() {
        let p = normalize_counts(&count_directly_follows(&running_example(), "name").unwrap());
        let s1 = prepare_for_conformance(&p, 1.0).unwrap();
        assert_eq!(s1.probabilities(), p.probabilities());
        assert_eq!(s1.denominator(), 1.0);
        let s0 = prepare_for_conformance(&p, 0.0).unwrap();
        assert!(s0.probabilities().iter().all(|&v| v == 1.0 / 3.0));
        assert_eq!(s0.denominator(), 1.0 / 3.0);
        assert!(matches!(
            prepare_for_conformance(&p, 1.2),
            Err(ModelError::AlphaOutOfRange(_))
        ));
        assert!(prepare_for_conformance(&p, -0.1).is_err());
        assert!(prepare_for_conformance(&p, f64::NAN).is_err());
    }

    #[test]
    fn lookup_policies() {
        let p = normalize_counts(&count_directly_follows(&running_example(), "name").unwrap());
        let s = prepare_for_conformance(&p, 0.5).unwrap();
        assert!((s.lookup("B", "C", UnknownPolicy::Zero) - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.lookup("C", "A", UnknownPolicy::Zero) - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(s.lookup("Z", "A", UnknownPolicy::Zero), 0.0);
        assert_eq!(s.lookup("A", "Z", UnknownPolicy::UniformFloor), 0.5 / 3.0);
    }

    #[test]
    fn index_rejects_bad_labels() {
        assert!(matches!(
            AccomplishmentIndex::from_labels(Vec::<String>::new()),
            Err(ModelError::NoAccomplishments)
        ));
        assert!(matches!(
            AccomplishmentIndex::from_sorted(vec!["a".into(), "a".into()]),
            Err(ModelError::DuplicateLabel(_))
        ));
        assert!(AccomplishmentIndex::from_sorted(vec!["b".into(), "a".into()]).is_err());
    }

    #[test]
    fn from_parts_checks_invariants() {
        let idx = AccomplishmentIndex::from_labels(["A", "B"]).unwrap();
        assert!(DescriptiveModel::from_parts(idx.clone(), vec![0.5, 0.5, 0.0, 0.0]).is_ok());
        assert!(matches!(
            DescriptiveModel::from_parts(idx.clone(), vec![1.0, 0.5, 0.0, 0.0]),
            Err(ModelError::InvariantViolation { row: 0, .. })
        ));
        assert!(matches!(
            DescriptiveModel::from_parts(idx.clone(), vec![0.5, 0.5, 0.0]),
            Err(ModelError::DimensionMismatch { .. })
        ));
        // floor at alpha 0.5 over two labels is 0.25
        assert!(PreparedModel::from_parts(idx.clone(), vec![0.5, 0.5, 0.25, 0.25], 0.5).is_ok());
        assert!(PreparedModel::from_parts(idx, vec![0.5, 0.5, 0.1, 0.25], 0.5).is_err());
    }
}

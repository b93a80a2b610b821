//! Text model format:
//!
//! ```text
//! softconform-model v1
//! alpha=<decimal|none>
//! labels=<comma-separated, lexicographic>
//! <|A| lines of |A| space-separated decimals, row-major>
//! ```
//!
//! `alpha=none` marks an unprepared [`DescriptiveModel`]. Numbers use the shortest
//! decimal that parses back to the same `f64`, so writing and reading is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AccomplishmentIndex, DescriptiveModel, ModelError, PreparedModel, TransitionMatrix};

pub const MODEL_HEADER: &str = "softconform-model v1";

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Descriptive(DescriptiveModel),
    Prepared(PreparedModel),
}

impl ModelFile {
    pub fn index(&self) -> &AccomplishmentIndex {
        match self {
            ModelFile::Descriptive(m) => m.index(),
            ModelFile::Prepared(m) => m.index(),
        }
    }

    pub fn is_prepared(&self) -> bool {
        matches!(self, ModelFile::Prepared(_))
    }
}

impl From<DescriptiveModel> for ModelFile {
    fn from(m: DescriptiveModel) -> Self {
        ModelFile::Descriptive(m)
    }
}

impl From<PreparedModel> for ModelFile {
    fn from(m: PreparedModel) -> Self {
        ModelFile::Prepared(m)
    }
}

pub fn write_model(model: &ModelFile, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let io_err = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_model_to(model, &mut out).map_err(|e| match e {
        ModelError::Io { source, .. } => io_err(source),
        other => other,
    })?;
    out.flush().map_err(io_err)
}

pub fn write_model_to<W: Write>(model: &ModelFile, mut out: W) -> Result<(), ModelError> {
    let (index, probs, alpha) = match model {
        ModelFile::Descriptive(m) => (m.index(), m.probabilities(), None),
        ModelFile::Prepared(m) => (m.index(), m.probabilities(), Some(m.alpha())),
    };
    if let Some(bad) = index
        .labels()
        .iter()
        .find(|l| l.contains([',', '\n', '\r']))
    {
        return Err(ModelError::UnserializableLabel(bad.clone()));
    }
    let mut text = String::new();
    text.push_str(MODEL_HEADER);
    text.push('\n');
    match alpha {
        Some(a) => text.push_str(&format!("alpha={a}\n")),
        None => text.push_str("alpha=none\n"),
    }
    text.push_str("labels=");
    text.push_str(&index.labels().join(","));
    text.push('\n');
    for row in probs.chunks(index.len()) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .map_err(|source| ModelError::Io {
            path: "<model output>".into(),
            source,
        })
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile, ModelError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_model_from(BufReader::new(file))
}

pub fn read_model_from<R: BufRead>(reader: R) -> Result<ModelFile, ModelError> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|source| ModelError::Io {
            path: "<model input>".into(),
            source,
        })?;
        lines.push(line.trim_end_matches('\r').to_string());
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let parse_err = |line: usize, message: String| ModelError::Parse { line, message };

    let header = lines.first().map(String::as_str).unwrap_or("");
    if header != MODEL_HEADER {
        return Err(ModelError::VersionMismatch(header.to_string()));
    }
    let alpha = lines
        .get(1)
        .and_then(|l| l.strip_prefix("alpha="))
        .ok_or_else(|| parse_err(2, "expected `alpha=<decimal|none>`".into()))?;
    let alpha = match alpha {
        "none" => None,
        a => Some(
            a.parse::<f64>()
                .map_err(|_| parse_err(2, format!("invalid alpha `{a}`")))?,
        ),
    };
    let labels = lines
        .get(2)
        .and_then(|l| l.strip_prefix("labels="))
        .ok_or_else(|| parse_err(3, "expected `labels=<comma-separated>`".into()))?;
    if labels.is_empty() {
        return Err(ModelError::NoAccomplishments);
    }
    let labels: Vec<String> = labels.split(',').map(str::to_string).collect();
    if labels.iter().any(String::is_empty) {
        return Err(parse_err(3, "empty label".into()));
    }
    let n = labels.len();
    let index = AccomplishmentIndex::from_sorted(labels)?;

    let rows = &lines[3..];
    let mut probs = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        for token in row.split(' ').filter(|t| !t.is_empty()) {
            let v = token
                .parse::<f64>()
                .map_err(|_| parse_err(i + 4, format!("invalid number `{token}`")))?;
            probs.push(v);
        }
    }
    let ragged = rows
        .iter()
        .any(|r| r.split(' ').filter(|t| !t.is_empty()).count() != n);
    if rows.len() != n || ragged {
        return Err(ModelError::DimensionMismatch {
            labels: n,
            rows: rows.len(),
            cells: probs.len(),
        });
    }
    match alpha {
        None => DescriptiveModel::from_parts(index, probs).map(ModelFile::Descriptive),
        Some(a) => PreparedModel::from_parts(index, probs, a).map(ModelFile::Prepared),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{EventLog, Trace};
    use crate::model::{count_directly_follows, normalize_counts, prepare_for_conformance};

    fn eq6() -> PreparedModel {
        let log = EventLog::from_variants([
            (Trace::from_labels("name", &["A", "B", "C"]).unwrap(), 3),
            (
                Trace::from_labels("name", &["A", "A", "B", "C"]).unwrap(),
                1,
            ),
        ]);
        let p = normalize_counts(&count_directly_follows(&log, "name").unwrap());
        prepare_for_conformance(&p, 0.5).unwrap()
    }

    fn to_string(m: &ModelFile) -> String {
        let mut out = Vec::new();
        write_model_to(m, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = ModelFile::Prepared(eq6());
        let text = to_string(&m);
        let back = read_model_from(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        assert!(text.starts_with("softconform-model v1\nalpha=0.5\nlabels=A,B,C\n"));
    }

    #[test]
    fn descriptive_format() {
        let idx = AccomplishmentIndex::from_labels(["A", "B"]).unwrap();
        let m = DescriptiveModel::from_parts(idx, vec![0.25, 0.75, 0.0, 0.0]).unwrap();
        let text = to_string(&m.clone().into());
        assert_eq!(
            text,
            "softconform-model v1\nalpha=none\nlabels=A,B\n0.25 0.75\n0 0\n"
        );
        assert_eq!(
            read_model_from(text.as_bytes()).unwrap(),
            ModelFile::Descriptive(m)
        );
    }

    #[test]
    fn tampered_row_sum_is_invariant_error() {
        let text = "softconform-model v1\nalpha=1\nlabels=A,B\n1 0.5\n0 0\n";
        assert!(matches!(
            read_model_from(text.as_bytes()),
            Err(ModelError::InvariantViolation { row: 0, .. })
        ));
    }

    #[test]
    fn label_count_mismatch_is_dimension_error() {
        let text = "softconform-model v1\nalpha=none\nlabels=A,B,C\n0 1\n0 0\n";
        assert!(matches!(
            read_model_from(text.as_bytes()),
            Err(ModelError::DimensionMismatch {
                labels: 3,
                rows: 2,
                ..
            })
        ));
        let text = "softconform-model v1\nalpha=none\nlabels=A,B\n0 1 0\n0 0\n";
        assert!(matches!(
            read_model_from(text.as_bytes()),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn version_mismatch() {
        let text = "softconform-model v2\nalpha=none\nlabels=A\n0\n";
        assert!(matches!(
            read_model_from(text.as_bytes()),
            Err(ModelError::VersionMismatch(v)) if v == "softconform-model v2"
        ));
    }

    #[test]
    fn rejects_labels_with_commas() {
        let idx = AccomplishmentIndex::from_labels(["a,b"]).unwrap();
        let m = DescriptiveModel::from_parts(idx, vec![0.0]).unwrap();
        let mut out = Vec::new();
        assert!(matches!(
            write_model_to(&m.into(), &mut out),
            Err(ModelError::UnserializableLabel(_))
        ));
    }
}

//! Score and fitness CSV files, and joining them for correlation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::pearson::{pearson, Correlation};
use super::EvalError;
use crate::checker::{CaseScore, Score};

pub const SCORES_HEADER: [&str; 3] = ["case_id", "soft_conformance", "observations"];

/// Writes `case_id,soft_conformance,observations`, one row per case in id order.
pub fn write_scores_csv<W: Write>(
    scores: &BTreeMap<String, CaseScore>,
    out: W,
) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SCORES_HEADER)?;
    for (id, s) in scores {
        wtr.write_record([
            id.as_str(),
            &s.score.to_string(),
            &s.observations.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, Score>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| EvalError::io(path, e))?;
    read_scores_from(file)
}

pub fn read_scores_from<R: Read>(reader: R) -> Result<BTreeMap<String, Score>, EvalError> {
    let table = read_column(reader, "soft_conformance")?;
    table
        .into_iter()
        .map(|(id, value, line)| {
            let score = if value == "pending" {
                Score::Pending
            } else {
                Score::Value(parse_number(&value, line)?)
            };
            Ok((id, score))
        })
        .collect()
}

/// Reads `case_id,<metric_column>` (header required; other columns ignored).
pub fn read_metric_csv(
    path: impl AsRef<Path>,
    metric_column: &str,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| EvalError::io(path, e))?;
    read_metric_from(file, metric_column)
}

pub fn read_metric_from<R: Read>(
    reader: R,
    metric_column: &str,
) -> Result<BTreeMap<String, f64>, EvalError> {
    read_column(reader, metric_column)?
        .into_iter()
        .map(|(id, value, line)| Ok((id, parse_number(&value, line)?)))
        .collect()
}

fn parse_number(value: &str, line: u64) -> Result<f64, EvalError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| EvalError::Parse {
            line,
            message: format!("not a number: `{value}`"),
        })
}

fn read_column<R: Read>(reader: R, column: &str) -> Result<Vec<(String, String, u64)>, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EvalError::MissingColumn(name.to_string()))
    };
    let id_col = find("case_id")?;
    let value_col = find(column)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(id_col).unwrap_or_default().to_string();
        if !seen.insert(id.clone()) {
            return Err(EvalError::Parse {
                line,
                message: format!("duplicate case id `{id}`"),
            });
        }
        out.push((id, rec.get(value_col).unwrap_or_default().to_string(), line));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorePair {
    pub case_id: String,
    pub soft_conformance: f64,
    pub external_metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinedScores {
    pub pairs: Vec<ScorePair>,
    /// Scored cases with no metric row.
    pub unmatched_scores: Vec<String>,
    /// Metric rows with no scored case.
    pub unmatched_metrics: Vec<String>,
    /// Cases matched by id but still pending (excluded).
    pub pending: Vec<String>,
}

/// Inner join on exact case id.
pub fn join_scores(
    scores: &BTreeMap<String, Score>,
    metrics: &BTreeMap<String, f64>,
) -> JoinedScores {
    let mut joined = JoinedScores::default();
    for (id, score) in scores {
        match (metrics.get(id), score) {
            (None, _) => joined.unmatched_scores.push(id.clone()),
            (Some(_), Score::Pending) => joined.pending.push(id.clone()),
            (Some(&m), Score::Value(s)) => joined.pairs.push(ScorePair {
                case_id: id.clone(),
                soft_conformance: *s,
                external_metric: m,
            }),
        }
    }
    joined.unmatched_metrics = metrics
        .keys()
        .filter(|id| !scores.contains_key(*id))
        .cloned()
        .collect();
    joined
}

/// Correlation between soft conformance and the external metric.
pub fn correlate_pairs(pairs: &[ScorePair]) -> Result<Correlation, EvalError> {
    let xs: Vec<f64> = pairs.iter().map(|p| p.soft_conformance).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.external_metric).collect();
    pearson(&xs, &ys)
}

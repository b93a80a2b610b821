use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use super::LogIoError;
use crate::event::{Event, EventLog, Trace};

/// How events are ordered inside a trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Ordering {
    /// Keep the order in which rows appear in the file.
    #[default]
    FileOrder,
    /// Stable-sort each trace by the named column (ISO-8601 or integer epoch seconds).
    TimestampColumn(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLogSchema {
    pub case_column: String,
    pub ordering: Ordering,
    pub delimiter: u8,
    /// Without a header, columns are named `col1`, `col2`, ...
    pub has_header: bool,
}

impl Default for CsvLogSchema {
    fn default() -> Self {
        Self {
            case_column: "case_id".to_string(),
            ordering: Ordering::FileOrder,
            delimiter: b',',
            has_header: true,
        }
    }
}

impl CsvLogSchema {
    pub fn with_case_column(case_column: impl Into<String>) -> Self {
        Self {
            case_column: case_column.into(),
            ..Self::default()
        }
    }
}

pub fn read_csv_log(path: impl AsRef<Path>, schema: &CsvLogSchema) -> Result<EventLog, LogIoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LogIoError::io(path, e))?;
    read_csv_log_from(file, schema)
}

pub fn read_csv_log_from<R: Read>(
    reader: R,
    schema: &CsvLogSchema,
) -> Result<EventLog, LogIoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let mut columns: Vec<String> = Vec::new();
    let mut pending_first: Option<csv::StringRecord> = None;
    if schema.has_header {
        match records.next() {
            Some(rec) => {
                let rec = rec?;
                let mut seen = HashSet::new();
                for name in rec.iter() {
                    if !seen.insert(name) {
                        return Err(LogIoError::DuplicateColumn(name.to_string()));
                    }
                    columns.push(name.to_string());
                }
            }
            None => return Ok(EventLog::new()),
        }
    } else if let Some(rec) = records.next() {
        let rec = rec?;
        columns = (1..=rec.len()).map(|i| format!("col{i}")).collect();
        pending_first = Some(rec);
    } else {
        return Ok(EventLog::new());
    }

    let case_idx = columns
        .iter()
        .position(|c| *c == schema.case_column)
        .ok_or_else(|| LogIoError::UnknownCaseColumn(schema.case_column.clone()))?;
    let ts_idx = match &schema.ordering {
        Ordering::FileOrder => None,
        Ordering::TimestampColumn(name) => Some(
            columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| LogIoError::Malformed {
                    line: 1,
                    message: format!("timestamp column `{name}` not found in header"),
                })?,
        ),
    };

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<(i128, Event)>> = HashMap::new();
    for rec in pending_first.into_iter().map(Ok).chain(records) {
        let rec: csv::StringRecord = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != columns.len() {
            return Err(LogIoError::Malformed {
                line,
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        let case = &rec[case_idx];
        if case.is_empty() {
            return Err(LogIoError::Malformed {
                line,
                message: "empty case id".to_string(),
            });
        }
        let key = match ts_idx {
            Some(i) => parse_timestamp(&rec[i]).ok_or_else(|| LogIoError::BadTimestamp {
                line,
                value: rec[i].to_string(),
            })?,
            None => 0,
        };
        let mut event = Event::new();
        for (i, value) in rec.iter().enumerate() {
            if i != case_idx && !value.is_empty() {
                event.insert(columns[i].as_str(), value)?;
            }
        }
        let slot = groups.entry(case.to_string()).or_insert_with(|| {
            order.push(case.to_string());
            Vec::new()
        });
        slot.push((key, event));
    }

    let mut log = EventLog::new();
    for id in order {
        let mut events = groups.remove(&id).expect("grouped above");
        if ts_idx.is_some() {
            events.sort_by_key(|(k, _)| *k);
        }
        let trace = Trace::new(events.into_iter().map(|(_, e)| e).collect())?;
        log.push(id, trace)?;
    }
    Ok(log)
}

/// Nanoseconds since the Unix epoch. Integers are epoch seconds; naive
/// date-times are taken as UTC.
fn parse_timestamp(value: &str) -> Option<i128> {
    let value = value.trim();
    if let Ok(secs) = value.parse::<i64>() {
        return Some(secs as i128 * 1_000_000_000);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return dt.timestamp_nanos_opt().map(i128::from);
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(value, fmt) {
            return dt.and_utc().timestamp_nanos_opt().map(i128::from);
        }
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .and_then(|dt| dt.and_utc().timestamp_nanos_opt())
        .map(i128::from)
}

pub fn write_csv_log(
    log: &EventLog,
    path: impl AsRef<Path>,
    schema: &CsvLogSchema,
) -> Result<(), LogIoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| LogIoError::io(path, e))?;
    write_csv_log_to(log, file, schema)?;
    Ok(())
}

/// Writes traces in canonical (content) order with columns sorted after the case
/// column. Case ids are regenerated as `c1`, `c2`, ...; original ids are not kept.
pub fn write_csv_log_to<W: Write>(
    log: &EventLog,
    writer: W,
    schema: &CsvLogSchema,
) -> Result<W, LogIoError> {
    let attrs = log.attribute_names();
    if attrs.contains(&schema.case_column.as_str()) {
        return Err(LogIoError::CaseColumnCollision(schema.case_column.clone()));
    }
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(writer);
    if schema.has_header {
        wtr.write_record(
            std::iter::once(schema.case_column.as_str()).chain(attrs.iter().copied()),
        )?;
    }
    let mut next = 1usize;
    for (trace, multiplicity) in log.multiset() {
        for _ in 0..multiplicity {
            let id = format!("c{next}");
            next += 1;
            for event in trace.events() {
                let row = std::iter::once(id.as_str())
                    .chain(attrs.iter().map(|a| event.get(a).unwrap_or("")));
                wtr.write_record(row)?;
            }
        }
    }
    wtr.flush().map_err(|e| LogIoError::io("<csv output>", e))?;
    wtr.into_inner()
        .map_err(|e| LogIoError::io("<csv output>", e.into_error()))
}

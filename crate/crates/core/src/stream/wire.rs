//! Wire protocol v1: UTF-8, `\n`-terminated lines of `case,accomplishment[,timestamp]`.
//!
//! The case id ends at the first comma and the accomplishment at the second;
//! anything after the second comma is an opaque timestamp. Labels therefore
//! cannot contain commas. Surrounding whitespace (including `\r`) is trimmed and
//! blank lines are skipped.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireEvent {
    pub case_id: String,
    pub accomplishment: String,
    pub timestamp: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed line `{line}`: {reason}")]
pub struct MalformedLine {
    pub line: String,
    pub reason: &'static str,
}

/// `Ok(None)` for blank lines.
pub fn parse_wire_line(line: &str) -> Result<Option<WireEvent>, MalformedLine> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    let bad = |reason| MalformedLine {
        line: trimmed.to_string(),
        reason,
    };
    let (case, rest) = trimmed
        .split_once(',')
        .ok_or_else(|| bad("missing comma"))?;
    let (accomplishment, timestamp) = match rest.split_once(',') {
        Some((a, t)) => (a, Some(t.trim())),
        None => (rest, None),
    };
    let (case, accomplishment) = (case.trim(), accomplishment.trim());
    if case.is_empty() {
        return Err(bad("empty case id"));
    }
    if accomplishment.is_empty() {
        return Err(bad("empty accomplishment"));
    }
    Ok(Some(WireEvent {
        case_id: case.to_string(),
        accomplishment: accomplishment.to_string(),
        timestamp: timestamp.filter(|t| !t.is_empty()).map(str::to_string),
    }))
}

/// True if `field` survives a trip through the wire format unchanged.
pub fn is_wire_safe(field: &str) -> bool {
    !field.is_empty() && !field.contains([',', '\n', '\r']) && field.trim() == field
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_and_three_fields() {
        let e = parse_wire_line("c1,A").unwrap().unwrap();
        assert_eq!((e.case_id.as_str(), e.accomplishment.as_str()), ("c1", "A"));
        assert_eq!(e.timestamp, None);
        let e = parse_wire_line("c1,A,2019-06-24T10:00:00\r")
            .unwrap()
            .unwrap();
        assert_eq!(e.accomplishment, "A");
        assert_eq!(e.timestamp.as_deref(), Some("2019-06-24T10:00:00"));
        // the timestamp field is opaque, commas included
        let e = parse_wire_line("c1,A,x,y").unwrap().unwrap();
        assert_eq!(e.timestamp.as_deref(), Some("x,y"));
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(parse_wire_line("c1").unwrap_err().reason, "missing comma");
        assert_eq!(parse_wire_line(",A").unwrap_err().reason, "empty case id");
        assert_eq!(
            parse_wire_line("c1, ").unwrap_err().reason,
            "empty accomplishment"
        );
        assert_eq!(parse_wire_line("  \n"), Ok(None));
    }

    #[test]
    fn wire_safety() {
        assert!(is_wire_safe("Check application"));
        assert!(!is_wire_safe("a,b"));
        assert!(!is_wire_safe(" a"));
        assert!(!is_wire_safe(""));
    }
}

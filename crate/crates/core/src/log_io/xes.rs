use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use super::LogIoError;
use crate::event::{Event, EventLog, Trace};

/// Reads the subset of XES needed for conformance work.
///
/// `concept:name` becomes `name`, `org:resource` becomes `originator`, every other
/// key is carried through verbatim. Ints and floats are re-rendered as plain
/// decimals, dates as RFC 3339 (`Z` for UTC). Nested meta-attributes, lists,
/// globals, classifiers and extensions are ignored. A trace without
/// `concept:name` is named `trace<k>` after its 1-based position; traces with no
/// events are dropped.
pub fn read_xes_log(path: impl AsRef<Path>) -> Result<EventLog, LogIoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LogIoError::io(path, e))?;
    read_xes_log_from(BufReader::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Log,
    Trace,
    Event,
    Other,
}

pub fn read_xes_log_from<R: BufRead>(reader: R) -> Result<EventLog, LogIoError> {
    let mut xml = Reader::from_reader(reader);
    xml.config_mut().trim_text(true);

    let mut buf = Vec::new();
    let mut stack: Vec<Scope> = Vec::new();
    let mut seen_root = false;
    let mut trace_no = 0usize;
    let mut case_id: Option<String> = None;
    let mut events: Vec<Event> = Vec::new();
    let mut current: Option<Event> = None;
    let mut log = EventLog::new();

    loop {
        let position = xml.buffer_position();
        let err = |message: String| LogIoError::Xes { position, message };
        let ev = xml
            .read_event_into(&mut buf)
            .map_err(|e| err(e.to_string()))?;
        match ev {
            XmlEvent::Start(ref e) | XmlEvent::Empty(ref e) => {
                let is_empty = matches!(ev, XmlEvent::Empty(_));
                let parent = stack.last().copied();
                let scope = match e.local_name().as_ref() {
                    b"log" if parent.is_none() => Scope::Log,
                    b"trace" => {
                        if parent != Some(Scope::Log) {
                            return Err(err("trace outside of log".into()));
                        }
                        trace_no += 1;
                        case_id = None;
                        events.clear();
                        Scope::Trace
                    }
                    b"event" => {
                        match parent {
                            Some(Scope::Trace) => {}
                            Some(Scope::Log) | None => {
                                return Err(err("event outside a trace".into()))
                            }
                            _ => return Err(err("event nested in an unexpected element".into())),
                        }
                        current = Some(Event::new());
                        Scope::Event
                    }
                    name => {
                        if parent.is_none() {
                            return Err(err(format!(
                                "unexpected root element `{}`",
                                String::from_utf8_lossy(name)
                            )));
                        }
                        if let Some((key, value)) = typed_attribute(e).map_err(&err)? {
                            match parent {
                                Some(Scope::Event) => {
                                    if let Some(event) = current.as_mut() {
                                        event.insert(map_key(&key), value)?;
                                    }
                                }
                                Some(Scope::Trace) if key == "concept:name" => {
                                    case_id = Some(value);
                                }
                                _ => {}
                            }
                        }
                        Scope::Other
                    }
                };
                seen_root = true;
                if is_empty {
                    close(
                        scope,
                        &mut current,
                        &mut events,
                        &mut case_id,
                        trace_no,
                        &mut log,
                    )?;
                } else {
                    stack.push(scope);
                }
            }
            XmlEvent::End(_) => {
                let scope = stack
                    .pop()
                    .ok_or_else(|| err("unbalanced end tag".into()))?;
                close(
                    scope,
                    &mut current,
                    &mut events,
                    &mut case_id,
                    trace_no,
                    &mut log,
                )?;
            }
            XmlEvent::Eof => {
                if !seen_root {
                    return Err(err("no XES log element found".into()));
                }
                if !stack.is_empty() {
                    return Err(err("unexpected end of file".into()));
                }
                break;
            }
            XmlEvent::Text(ref t) if !t.is_empty() && stack.is_empty() => {
                return Err(err("text outside of the log element".into()));
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(log)
}

fn close(
    scope: Scope,
    current: &mut Option<Event>,
    events: &mut Vec<Event>,
    case_id: &mut Option<String>,
    trace_no: usize,
    log: &mut EventLog,
) -> Result<(), LogIoError> {
    match scope {
        Scope::Event => {
            if let Some(e) = current.take() {
                events.push(e);
            }
        }
        Scope::Trace => {
            let id = case_id.take().unwrap_or_else(|| format!("trace{trace_no}"));
            if events.is_empty() {
                log::warn!("XES trace `{id}` has no events; skipped");
            } else {
                log.push(id, Trace::new(std::mem::take(events))?)?;
            }
        }
        Scope::Log | Scope::Other => {}
    }
    Ok(())
}

fn map_key(key: &str) -> &str {
    match key {
        "concept:name" => "name",
        "org:resource" => "originator",
        other => other,
    }
}

/// Returns `(key, rendered value)` for XES typed attribute elements, `None` for
/// anything else or for empty values.
fn typed_attribute(e: &BytesStart<'_>) -> Result<Option<(String, String)>, String> {
    let kind = e.local_name();
    let kind = kind.as_ref();
    if !matches!(
        kind,
        b"string" | b"date" | b"int" | b"float" | b"boolean" | b"id"
    ) {
        return Ok(None);
    }
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|e| e.to_string())?;
        let v = attr
            .unescape_value()
            .map_err(|e| e.to_string())?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(v),
            b"value" => value = Some(v),
            _ => {}
        }
    }
    let (Some(key), Some(value)) = (key, value) else {
        return Err("typed attribute without key or value".into());
    };
    if key.is_empty() || value.is_empty() {
        return Ok(None);
    }
    let rendered = match kind {
        b"int" => value
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("`{key}`: invalid int `{value}`"))?
            .to_string(),
        b"float" => value
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("`{key}`: invalid float `{value}`"))?
            .to_string(),
        b"date" => DateTime::parse_from_rfc3339(value.trim())
            .map_err(|_| format!("`{key}`: invalid date `{value}`"))?
            .to_rfc3339_opts(SecondsFormat::AutoSi, true),
        _ => value,
    };
    Ok(Some((key, rendered)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{project_log, MissingPolicy};

    fn read(s: &str) -> Result<EventLog, LogIoError> {
        read_xes_log_from(s.as_bytes())
    }

    const SAMPLE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>
  <global scope="event"><string key="concept:name" value="__INVALID__"/></global>
  <string key="concept:name" value="the log"/>
  <trace>
    <string key="concept:name" value="case-1"/>
    <event>
      <string key="concept:name" value="A"/>
      <string key="org:resource" value="r1"/>
      <date key="time:timestamp" value="2019-06-24T10:00:00.000+00:00"/>
      <int key="cost" value="+5"/>
    </event>
    <event>
      <string key="concept:name" value="B"/>
      <string key="org:resource" value="r2"/>
      <float key="weight" value="1.50"/>
      <string key="nested" value="x"><string key="meta" value="ignored"/></string>
    </event>
  </trace>
</log>"#;

    #[test]
    fn reads_names_and_resources() {
        let log = read(SAMPLE).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.cases()[0].id, "case-1");
        let names = project_log(&log, "name", MissingPolicy::Fail).unwrap();
        assert_eq!(names[&vec!["A".to_string(), "B".into()]], 1);
        let res = project_log(&log, "originator", MissingPolicy::Fail).unwrap();
        assert_eq!(res[&vec!["r1".to_string(), "r2".into()]], 1);
    }

    #[test]
    fn renders_typed_values() {
        let log = read(SAMPLE).unwrap();
        let events = log.cases()[0].trace.events();
        assert_eq!(
            events[0].get("time:timestamp"),
            Some("2019-06-24T10:00:00Z")
        );
        assert_eq!(events[0].get("cost"), Some("5"));
        assert_eq!(events[1].get("weight"), Some("1.5"));
        assert_eq!(events[1].get("nested"), Some("x"));
        assert_eq!(events[1].get("meta"), None);
    }

    #[test]
    fn unnamed_traces_and_empty_traces() {
        let s = r#"<log><trace/><trace><event><string key="concept:name" value="A"/></event></trace></log>"#;
        let log = read(s).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.cases()[0].id, "trace2");
    }

    #[test]
    fn rejects_event_outside_trace() {
        let s = r#"<log><event><string key="concept:name" value="A"/></event></log>"#;
        assert!(
            matches!(read(s).unwrap_err(), LogIoError::Xes { message, .. } if message.contains("outside"))
        );
    }

    #[test]
    fn rejects_non_xml() {
        assert!(matches!(
            read("case_id,name\nc,A\n").unwrap_err(),
            LogIoError::Xes { .. }
        ));
        assert!(matches!(
            read("<log><trace>").unwrap_err(),
            LogIoError::Xes { .. }
        ));
    }
}

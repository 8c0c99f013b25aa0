//! Event file ingestion and export.
//!
//! Two formats are accepted: line-delimited JSON and CSV with a header row.
//! In CSV, the header order is authoritative: the four core columns may
//! appear anywhere, and every other column becomes a context slot named
//! after its header. Empty CSV cells mean "slot absent".

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{EventLog, InteractionEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for EventFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(EventFormat::Jsonl),
            "csv" => Ok(EventFormat::Csv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Loads an event log from a file, sorting by timestamp on return.
pub fn load_events(path: &Path, format: EventFormat) -> Result<EventLog> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let log = load_events_from_reader(BufReader::new(file), format)?;
    log::info!("loaded {} events from {}", log.len(), path.display());
    Ok(log)
}

/// Same as [`load_events`] but over any reader (used by tests and pipes).
pub fn load_events_from_reader<R: Read>(reader: R, format: EventFormat) -> Result<EventLog> {
    match format {
        EventFormat::Jsonl => load_jsonl(BufReader::new(reader)),
        EventFormat::Csv => load_csv(reader),
    }
}

fn load_jsonl<R: BufRead>(reader: R) -> Result<EventLog> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| Error::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = parse_json_event(&line, line_no)?;
        ev.validate(line_no)?;
        events.push(ev);
    }
    EventLog::from_events(events)
}

/// Field-by-field extraction so parse errors name the offending field, not
/// just the record. Extra top-level keys are ignored.
fn parse_json_event(line: &str, line_no: usize) -> Result<InteractionEvent> {
    let parse_err = |field: &str, message: String| Error::Parse {
        line: line_no,
        field: field.to_string(),
        message,
    };
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| parse_err("record", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| parse_err("record", "expected a JSON object".into()))?;

    let get_u64 = |field: &str| -> Result<u64> {
        let v = obj
            .get(field)
            .ok_or_else(|| parse_err(field, "missing field".into()))?;
        v.as_u64()
            .ok_or_else(|| parse_err(field, format!("expected unsigned integer, got {v}")))
    };
    let ts_value = obj
        .get("timestamp")
        .ok_or_else(|| parse_err("timestamp", "missing field".into()))?;
    let timestamp = ts_value.as_i64().ok_or_else(|| {
        parse_err(
            "timestamp",
            format!("expected integer seconds, got {ts_value}"),
        )
    })?;
    let label64 = get_u64("label")?;
    let label = u8::try_from(label64)
        .map_err(|_| parse_err("label", format!("expected 0 or 1, got {label64}")))?;

    let mut context = BTreeMap::new();
    if let Some(ctx) = obj.get("context") {
        let map = ctx
            .as_object()
            .ok_or_else(|| parse_err("context", format!("expected an object, got {ctx}")))?;
        for (k, v) in map {
            let s = v
                .as_str()
                .ok_or_else(|| parse_err("context", format!("slot `{k}`: expected a string")))?;
            context.insert(k.clone(), s.to_string());
        }
    }

    Ok(InteractionEvent {
        user_id: get_u64("user_id")?,
        item_id: get_u64("item_id")?,
        timestamp,
        label,
        context,
    })
}

fn load_csv<R: Read>(reader: R) -> Result<EventLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            field: "header".into(),
            message: e.to_string(),
        })?
        .clone();

    let mut core = BTreeMap::new();
    let mut context_cols: Vec<(usize, String)> = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        match name {
            "user_id" | "item_id" | "timestamp" | "label" => {
                core.insert(name.to_string(), i);
            }
            other => context_cols.push((i, other.to_string())),
        }
    }
    for required in ["user_id", "item_id", "timestamp", "label"] {
        if !core.contains_key(required) {
            return Err(Error::Parse {
                line: 1,
                field: required.into(),
                message: format!("missing required column `{required}` in CSV header"),
            });
        }
    }

    let mut events = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line_no = idx + 2; // header is line 1
        let record = record.map_err(|e| Error::Parse {
            line: line_no,
            field: "record".into(),
            message: e.to_string(),
        })?;
        let parse_u64 = |key: &str| -> Result<u64> {
            let raw = &record[core[key]];
            raw.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                field: key.into(),
                message: format!("expected unsigned integer, got {raw:?}"),
            })
        };
        let raw_ts = &record[core["timestamp"]];
        let timestamp = raw_ts.parse::<i64>().map_err(|_| Error::Parse {
            line: line_no,
            field: "timestamp".into(),
            message: format!("expected integer seconds, got {raw_ts:?}"),
        })?;
        let raw_label = &record[core["label"]];
        let label = raw_label.parse::<u8>().map_err(|_| Error::Parse {
            line: line_no,
            field: "label".into(),
            message: format!("expected 0 or 1, got {raw_label:?}"),
        })?;
        let mut context = BTreeMap::new();
        for (col, name) in &context_cols {
            let val = &record[*col];
            if !val.is_empty() {
                context.insert(name.clone(), val.to_string());
            }
        }
        let ev = InteractionEvent {
            user_id: parse_u64("user_id")?,
            item_id: parse_u64("item_id")?,
            timestamp,
            label,
            context,
        };
        ev.validate(line_no)?;
        events.push(ev);
    }
    EventLog::from_events(events)
}

/// Writes a log in the given format. JSONL preserves context maps verbatim;
/// CSV emits the four core columns followed by the sorted union of context
/// slot names.
pub fn save_events(log: &EventLog, path: &Path, format: EventFormat) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    let mut file = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        EventFormat::Jsonl => {
            let mut buf = String::new();
            for ev in log {
                buf.push_str(&serde_json::to_string(ev).expect("event serializes"));
                buf.push('\n');
            }
            file.write_all(buf.as_bytes()).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        EventFormat::Csv => {
            let mut slots: Vec<String> = Vec::new();
            for ev in log {
                for k in ev.context.keys() {
                    if !slots.contains(k) {
                        slots.push(k.clone());
                    }
                }
            }
            slots.sort();
            let mut wtr = csv::Writer::from_writer(&mut file);
            let mut header = vec![
                "user_id".to_string(),
                "item_id".to_string(),
                "timestamp".to_string(),
                "label".to_string(),
            ];
            header.extend(slots.iter().cloned());
            wtr.write_record(&header).map_err(csv_io(path))?;
            for ev in log {
                let mut row = vec![
                    ev.user_id.to_string(),
                    ev.item_id.to_string(),
                    ev.timestamp.to_string(),
                    ev.label.to_string(),
                ];
                for slot in &slots {
                    row.push(ev.context.get(slot).cloned().unwrap_or_default());
                }
                wtr.write_record(&row).map_err(csv_io(path))?;
            }
            wtr.flush().map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    Ok(())
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e),
    }
}

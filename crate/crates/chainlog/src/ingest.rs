//! Change-log readers for the JSONL and CSV record formats.
//!
//! JSONL, one object per line:
//!
//! ```text
//! {"ts": "2009-11-18T10:22:33Z", "user": "u66", "class": "icd:K35", "action": "property_value_changed", "property": "title"}
//! ```
//!
//! `ts` is RFC 3339 text or integer epoch milliseconds. `property` may be
//! null or absent. CSV files carry the header `ts,user,class,action,property`
//! and an empty property field means absent.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chainlog_core::{ChangeLog, ChangeRecord, IngestConfig};
use chrono::DateTime;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["ts", "user", "class", "action", "property"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl LogFormat {
    /// `.csv` files are CSV, everything else is treated as JSONL.
    pub fn from_extension(path: &Path) -> LogFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::Jsonl,
        }
    }
}

impl FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(LogFormat::Jsonl),
            "csv" => Ok(LogFormat::Csv),
            other => Err(format!(
                "unknown log format {other:?} (expected jsonl or csv)"
            )),
        }
    }
}

impl fmt::Display for LogFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogFormat::Jsonl => "jsonl",
            LogFormat::Csv => "csv",
        })
    }
}

/// Parses an RFC 3339 instant or integer epoch milliseconds into epoch milliseconds.
pub fn parse_timestamp(text: &str) -> Result<i64, String> {
    let text = text.trim();
    if !text.is_empty()
        && text
            .trim_start_matches('-')
            .bytes()
            .all(|b| b.is_ascii_digit())
    {
        return text
            .parse::<i64>()
            .map_err(|e| format!("bad epoch milliseconds {text:?}: {e}"));
    }
    DateTime::parse_from_rfc3339(text)
        .map(|dt| dt.timestamp_millis())
        .map_err(|e| format!("unparseable timestamp {text:?}: {e}"))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTs {
    Millis(i64),
    Text(String),
}

#[derive(Deserialize)]
struct JsonRecord {
    ts: Option<JsonTs>,
    user: Option<String>,
    class: Option<String>,
    action: Option<String>,
    #[serde(default)]
    property: Option<String>,
}

fn required(value: Option<String>, field: &str) -> Result<String, String> {
    match value {
        Some(v) if !v.is_empty() => Ok(v),
        Some(_) => Err(format!("field {field:?} is empty")),
        None => Err(format!("missing field {field:?}")),
    }
}

fn optional_property(value: Option<String>) -> Option<String> {
    value.filter(|p| !p.is_empty())
}

fn parse_json_line(line: &str, seq: u64) -> Result<ChangeRecord, String> {
    let raw: JsonRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let ts = match raw.ts {
        Some(JsonTs::Millis(ms)) => ms,
        Some(JsonTs::Text(t)) => parse_timestamp(&t)?,
        None => return Err("missing field \"ts\"".into()),
    };
    Ok(ChangeRecord {
        seq,
        ts,
        user: required(raw.user, "user")?,
        class_id: required(raw.class, "class")?,
        action: required(raw.action, "action")?,
        property: optional_property(raw.property),
    })
}

/// Hex SHA-256 of the input bytes.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads every record in file order, without filtering or sorting.
///
/// Returns the records together with the digest of the file contents.
pub fn read_records(path: &Path, format: LogFormat) -> Result<(Vec<ChangeRecord>, String)> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| Error::format(path, format!("not UTF-8: {e}")))?;
    let records = match format {
        LogFormat::Jsonl => parse_jsonl(path, text)?,
        LogFormat::Csv => parse_csv(path, text)?,
    };
    Ok((records, digest(&bytes)))
}

fn parse_jsonl(path: &Path, text: &str) -> Result<Vec<ChangeRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seq = records.len() as u64;
        let record = parse_json_line(line, seq).map_err(|reason| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            reason,
        })?;
        records.push(record);
    }
    Ok(records)
}

fn parse_csv(path: &Path, text: &str) -> Result<Vec<ChangeRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    match rows.next() {
        Some(Ok(header)) if header.iter().eq(CSV_HEADER) => {}
        Some(Ok(header)) => {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                line: 1,
                reason: format!(
                    "expected header {:?}, found {:?}",
                    CSV_HEADER.join(","),
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            })
        }
        Some(Err(e)) => return Err(Error::format(path, e)),
        None => return Ok(Vec::new()),
    }
    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(|e| Error::format(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let malformed = |reason: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            line,
            reason,
        };
        if row.len() != CSV_HEADER.len() {
            return Err(malformed(format!("expected 5 fields, found {}", row.len())));
        }
        let record = parse_csv_row(&row, records.len() as u64).map_err(malformed)?;
        records.push(record);
    }
    Ok(records)
}

fn parse_csv_row(row: &csv::StringRecord, seq: u64) -> Result<ChangeRecord, String> {
    let field = |i: usize| Some(row[i].to_string());
    Ok(ChangeRecord {
        seq,
        ts: parse_timestamp(&row[0])?,
        user: required(field(1), "user")?,
        class_id: required(field(2), "class")?,
        action: required(field(3), "action")?,
        property: optional_property(field(4)),
    })
}

/// Reads, filters, sorts and optionally obfuscates a change log.
pub fn parse_changelog(path: &Path, format: LogFormat, config: &IngestConfig) -> Result<ChangeLog> {
    let (records, digest) = read_records(path, format)?;
    ChangeLog::normalize(records, config, digest).map_err(|source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    })
}

/// One username per line; blank lines and `#` comments are ignored.
pub fn read_user_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

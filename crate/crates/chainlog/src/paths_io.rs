//! Interaction paths as JSON lines: `{"owner": "...", "kind": "...", "labels": [...]}`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chainlog_core::{InteractionPath, PathKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct PathLine {
    owner: String,
    kind: String,
    labels: Vec<String>,
}

pub fn write_paths_jsonl(paths: &[InteractionPath], out: &Path) -> Result<()> {
    let file = File::create(out).map_err(Error::io(out))?;
    let mut w = BufWriter::new(file);
    for p in paths {
        let line = PathLine {
            owner: p.owner.clone(),
            kind: p.kind.as_str().to_string(),
            labels: p.labels.clone(),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::format(out, e))?;
        w.write_all(b"\n").map_err(Error::io(out))?;
    }
    w.flush().map_err(Error::io(out))
}

pub fn read_paths_jsonl(path: &Path) -> Result<Vec<InteractionPath>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut paths = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            reason,
        };
        let raw: PathLine = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let kind: PathKind = raw
            .kind
            .parse()
            .map_err(|e: chainlog_core::PathError| malformed(e.to_string()))?;
        let p = InteractionPath::new(raw.owner, kind, raw.labels)
            .map_err(|e| malformed(e.to_string()))?;
        paths.push(p);
    }
    Ok(paths)
}

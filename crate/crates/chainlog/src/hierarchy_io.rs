//! `child,parent` edge-list reader.

use std::fs;
use std::path::Path;

use chainlog_core::{HierarchyBuilder, HierarchyGraph};

use crate::error::{Error, Result};

/// Loads an `isKindOf` edge list.
///
/// The header `child,parent` is optional. A row with an empty parent
/// declares a class without adding an edge.
pub fn load_hierarchy(path: &Path, root_override: Option<&str>) -> Result<HierarchyGraph> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut builder = HierarchyBuilder::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::format(path, e))?;
        let line = row.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && row.iter().eq(["child", "parent"]) {
            continue;
        }
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != 2 || row[0].is_empty() {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                line,
                reason: "expected `child,parent`".into(),
            });
        }
        if row[1].is_empty() {
            builder.add_node(&row[0]);
        } else {
            builder.add_edge(&row[0], &row[1]);
        }
    }
    builder.build(root_override).map_err(|source| Error::Graph {
        path: path.to_path_buf(),
        source,
    })
}

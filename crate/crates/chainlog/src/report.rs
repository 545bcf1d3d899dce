use std::fs;
use std::path::Path;

use chainlog_core::{tuple_label, TransitionModel};
use serde::Serialize;

use crate::error::{Error, Result};

pub const TOP_TRANSITIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopTransition {
    pub from: String,
    pub to: String,
    pub p: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub path_kind: String,
    pub order: usize,
    pub alpha: f64,
    pub source_digest: String,
    pub n_paths: usize,
    pub n_states: usize,
    pub n_transitions: u64,
    /// `None` when the distribution has fewer than two entries.
    pub normalized_entropy: Option<f64>,
    pub gini: Option<f64>,
    /// What the inequality metrics were computed over.
    pub entropy_source: String,
    pub top_transitions: Vec<TopTransition>,
    pub break_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moved_before_changed: Option<u64>,
}

/// Most frequent transitions by count, ties broken by `(from, to)` labels.
pub fn top_transitions(m: &TransitionModel, limit: usize) -> Vec<TopTransition> {
    let mut all = Vec::new();
    for row in 0..m.histories().len() {
        let history = m.history_labels(row);
        let from = if m.order() == 1 {
            history[0].to_string()
        } else {
            tuple_label(&history)
        };
        let probs = m.row_probabilities(row).unwrap_or_default();
        for &(s, count) in m.row_counts(row) {
            all.push(TopTransition {
                from: from.clone(),
                to: m.states().label(s).to_string(),
                p: probs.get(s).copied().unwrap_or(0.0),
                count,
            });
        }
    }
    all.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.from.cmp(&b.from))
            .then_with(|| a.to.cmp(&b.to))
    });
    all.truncate(limit);
    all
}

pub fn export_report_json(report: &Report, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::format(path, e))?;
    fs::write(path, json + "\n").map_err(Error::io(path))
}

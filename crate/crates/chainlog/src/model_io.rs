//! Model files: `{kind, order, alpha, states[], histories[], counts[][]}`.
//!
//! Counts are the source of truth; probabilities are recomputed on load.

use std::fs;
use std::path::Path;

use chainlog_core::{PathKind, TransitionModel};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub order: usize,
    pub alpha: f64,
    pub states: Vec<String>,
    pub histories: Vec<Vec<String>>,
    pub counts: Vec<Vec<u64>>,
}

impl ModelFile {
    pub fn from_model(m: &TransitionModel) -> Self {
        let rows = 0..m.histories().len();
        ModelFile {
            kind: m.kind().as_str().to_string(),
            order: m.order(),
            alpha: m.alpha(),
            states: m.states().labels().to_vec(),
            histories: rows
                .clone()
                .map(|r| m.history_labels(r).into_iter().map(String::from).collect())
                .collect(),
            counts: rows.map(|r| m.dense_counts(r)).collect(),
        }
    }

    pub fn into_model(self) -> Result<TransitionModel> {
        let kind: PathKind = self.kind.parse()?;
        Ok(TransitionModel::from_counts(
            kind,
            self.order,
            self.alpha,
            self.states,
            self.histories,
            self.counts,
        )?)
    }
}

pub fn save_model(m: &TransitionModel, out: &Path) -> Result<()> {
    let json =
        serde_json::to_string(&ModelFile::from_model(m)).map_err(|e| Error::format(out, e))?;
    fs::write(out, json + "\n").map_err(Error::io(out))
}

pub fn load_model(path: &Path) -> Result<TransitionModel> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
    file.into_model()
}

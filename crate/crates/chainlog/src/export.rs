//! Matrix and histogram CSV exports.
//!
//! Matrices are laid out rows = source (history), columns = target state,
//! both in lexicographic order. First-order matrices list every state as a
//! row; higher orders list the observed histories, labelled `(a,b,...)`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chainlog_core::{tuple_label, ContributionDistribution, TransitionModel};

use crate::error::{Error, Result};

pub const CORNER: &str = "from\\to";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixValues {
    /// Probabilities with 9 decimals; absent rows have empty cells.
    Probs,
    Counts,
}

/// Matrix rows in export order: `(row label, stored row index if any)`.
pub fn matrix_rows(m: &TransitionModel) -> Vec<(String, Option<usize>)> {
    if m.order() == 1 {
        m.states()
            .labels()
            .iter()
            .map(|s| (s.clone(), m.find_history(&[s]).ok().flatten()))
            .collect()
    } else {
        (0..m.histories().len())
            .map(|r| (tuple_label(&m.history_labels(r)), Some(r)))
            .collect()
    }
}

fn probability_cells(m: &TransitionModel, row: Option<usize>) -> Vec<String> {
    let n = m.states().len();
    let probs = match row {
        Some(r) => m.row_probabilities(r),
        // Unobserved first-order rows are still defined under smoothing.
        None if m.alpha() > 0.0 => Some(vec![1.0 / n as f64; n]),
        None => None,
    };
    match probs {
        Some(ps) => ps.iter().map(|p| format!("{p:.9}")).collect(),
        None => vec![String::new(); n],
    }
}

pub fn write_matrix_csv<W: Write>(
    m: &TransitionModel,
    which: MatrixValues,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![CORNER.to_string()];
    header.extend(m.states().labels().iter().cloned());
    w.write_record(&header)?;
    for (label, row) in matrix_rows(m) {
        let cells = match which {
            MatrixValues::Probs => probability_cells(m, row),
            MatrixValues::Counts => match row {
                Some(r) => m.dense_counts(r).iter().map(u64::to_string).collect(),
                None => vec!["0".to_string(); m.states().len()],
            },
        };
        let mut record = Vec::with_capacity(cells.len() + 1);
        record.push(label);
        record.extend(cells);
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_matrix_csv(m: &TransitionModel, which: MatrixValues, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    write_matrix_csv(m, which, BufWriter::new(file)).map_err(|e| Error::format(path, e))
}

/// A count matrix read back from [`export_matrix_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<u64>)>,
}

pub fn read_count_matrix_csv(path: &Path) -> Result<CountMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e))?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| Error::format(path, e))?,
        None => return Err(Error::format(path, "empty matrix file")),
    };
    if header.get(0) != Some(CORNER) {
        return Err(Error::format(
            path,
            format!("first header cell must be {CORNER:?}"),
        ));
    }
    let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::format(path, e))?;
        let cells = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.parse::<u64>()
                    .map_err(|e| Error::format(path, format!("bad count {c:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((rec[0].to_string(), cells));
    }
    Ok(CountMatrix { columns, rows })
}

/// `label,count`, one row per label in lexicographic order.
pub fn export_histogram_csv(hist: &ContributionDistribution, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let write = |w: &mut csv::Writer<_>| -> csv::Result<()> {
        w.write_record(["label", "count"])?;
        for (label, count) in hist.entries() {
            w.write_record([label.as_str(), &count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| Error::format(path, e))
}

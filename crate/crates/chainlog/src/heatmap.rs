//! SVG transition-map rendering.
//!
//! Fill is linear in probability, white at 0 and black at 1. Rows are
//! sources, columns targets, both lexicographic. Cells with probability 0
//! and rows without observations are left as white background. Output is
//! plain text with fixed formatting so identical models render to identical
//! bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chainlog_core::TransitionModel;

use crate::error::{Error, Result};
use crate::export::matrix_rows;

const CELL: usize = 14;
const CHAR_WIDTH: usize = 7;
const PAD: usize = 10;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Gray level for a probability: 255 at 0, 0 at 1.
pub fn gray(p: f64) -> u8 {
    (255.0 * (1.0 - p.clamp(0.0, 1.0))).round() as u8
}

/// Keeps states whose count is at least `min_count`; `0` keeps everything.
pub fn min_count_filter(
    counts: &BTreeMap<String, u64>,
    min_count: u64,
) -> impl Fn(&str) -> bool + '_ {
    move |state| min_count == 0 || counts.get(state).copied().unwrap_or(0) >= min_count
}

/// Renders the model's probability matrix, omitting states rejected by `keep`.
///
/// Filtering only affects the figure; probabilities are not renormalized.
pub fn render_heatmap_svg(m: &TransitionModel, keep: impl Fn(&str) -> bool) -> String {
    let states = m.states();
    let columns: Vec<usize> = (0..states.len())
        .filter(|&s| keep(states.label(s)))
        .collect();
    let rows: Vec<(String, Option<usize>)> = matrix_rows(m)
        .into_iter()
        .filter(|(_, row)| match row {
            Some(r) => m.histories()[*r].iter().all(|&s| keep(states.label(s))),
            None => true,
        })
        .filter(|(label, row)| row.is_some() || keep(label))
        .collect();

    let row_label_chars = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0);
    let col_label_chars = columns
        .iter()
        .map(|&s| states.label(s).chars().count())
        .max()
        .unwrap_or(0);
    let left = PAD + row_label_chars * CHAR_WIDTH;
    let top = PAD + col_label_chars * CHAR_WIDTH;
    let width = left + columns.len() * CELL + PAD;
    let height = top + rows.len() * CELL + PAD;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="#cccccc"/>"##,
        columns.len() * CELL,
        rows.len() * CELL
    );

    for (j, &s) in columns.iter().enumerate() {
        let x = left + j * CELL + CELL / 2 + 4;
        let _ = writeln!(
            svg,
            r#"<text transform="translate({x},{}) rotate(-90)">{}</text>"#,
            top - 4,
            escape(states.label(s))
        );
    }

    for (i, (label, row)) in rows.iter().enumerate() {
        let y = top + i * CELL;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 4,
            y + CELL - 3,
            escape(label)
        );
        let probs = match row {
            Some(r) => m.row_probabilities(*r),
            None if m.alpha() > 0.0 => Some(vec![1.0 / states.len() as f64; states.len()]),
            None => None,
        };
        let Some(probs) = probs else { continue };
        for (j, &s) in columns.iter().enumerate() {
            let p = probs[s];
            if p <= 0.0 {
                continue;
            }
            let g = gray(p);
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="#{g:02x}{g:02x}{g:02x}"><title>{} -&gt; {}: {p:.9}</title></rect>"##,
                left + j * CELL,
                escape(label),
                escape(states.label(s)),
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_heatmap_svg(
    m: &TransitionModel,
    keep: impl Fn(&str) -> bool,
    path: &Path,
) -> Result<()> {
    fs::write(path, render_heatmap_svg(m, keep)).map_err(Error::io(path))
}

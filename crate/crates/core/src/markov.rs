//! Markov chain models of arbitrary order over interaction paths.
//!
//! Estimation is maximum likelihood over sliding windows, with optional
//! additive (Laplace) smoothing:
//!
//! ```text
//! P(next = j | history = h) = (count[h][j] + alpha) / (sum_j count[h][j] + alpha * |S|)
//! ```
//!
//! Windows never cross path boundaries and no artificial start or end
//! states are added. With `alpha == 0`, a history that was never observed
//! has no row; queries against it fail with [`ModelError::AbsentRow`]
//! instead of falling back to a uniform guess.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::paths::{InteractionPath, PathKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("no path yields a single (context, next) window")]
    InsufficientData,
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("no observations for history ({})", .0.join(","))]
    AbsentRow(Vec<String>),
    #[error("model order must be at least 1")]
    InvalidOrder,
    #[error("smoothing alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("paths mix kinds {0} and {1}")]
    MixedKinds(PathKind, PathKind),
    #[error("history has {got} states, model order is {expected}")]
    HistoryLength { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Lexicographically sorted, deduplicated state labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateSpace {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl StateSpace {
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut sorted: Vec<String> = labels.into_iter().map(|s| s.as_ref().to_string()).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let index = sorted
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        StateSpace {
            labels: sorted,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    fn require(&self, label: &str) -> Result<usize, ModelError> {
        self.index_of(label)
            .ok_or_else(|| ModelError::UnknownState(label.to_string()))
    }
}

/// Where sampled paths begin.
#[derive(Debug, Clone, PartialEq)]
pub enum StartDistribution {
    /// Observed histories weighted by how often they were seen as contexts.
    Empirical,
    /// Always start from this history.
    Fixed(Vec<String>),
    /// Explicit weights over histories; weights need not sum to one.
    Weighted(Vec<(Vec<String>, f64)>),
}

/// Log-likelihood of a set of paths under a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    /// Natural-log likelihood; `-inf` when any window has probability zero.
    pub value: f64,
    pub windows: usize,
    /// Windows whose transition has zero probability or no row at all.
    pub zero_probability_windows: usize,
}

impl LogLikelihood {
    pub fn is_degenerate(&self) -> bool {
        self.zero_probability_windows > 0
    }
}

/// Fitted order-k transition model. Counts are the source of truth;
/// probabilities are derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    kind: PathKind,
    order: usize,
    alpha: f64,
    states: StateSpace,
    histories: Vec<Vec<usize>>,
    history_index: BTreeMap<Vec<usize>, usize>,
    /// Sparse rows sorted by state index; zero counts are never stored.
    rows: Vec<Vec<(usize, u64)>>,
    row_totals: Vec<u64>,
}

fn check_params(order: usize, alpha: f64) -> Result<(), ModelError> {
    if order == 0 {
        return Err(ModelError::InvalidOrder);
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(ModelError::InvalidAlpha(alpha));
    }
    Ok(())
}

impl TransitionModel {
    /// Counts every `(history, next)` window of length `order + 1` within each path.
    ///
    /// The state space contains every label of every path, including paths
    /// too short to contribute a window. All paths must share one kind.
    pub fn fit(paths: &[InteractionPath], order: usize, alpha: f64) -> Result<Self, ModelError> {
        check_params(order, alpha)?;
        let kind = match paths.first() {
            Some(p) => p.kind,
            None => return Err(ModelError::InsufficientData),
        };
        if let Some(other) = paths.iter().find(|p| p.kind != kind) {
            return Err(ModelError::MixedKinds(kind, other.kind));
        }

        let states = StateSpace::from_labels(paths.iter().flat_map(|p| p.labels.iter()));
        let encoded: Vec<Vec<usize>> = paths
            .iter()
            .map(|p| p.labels.iter().map(|l| states.index[l]).collect())
            .collect();

        let mut counts: BTreeMap<&[usize], BTreeMap<usize, u64>> = BTreeMap::new();
        for path in &encoded {
            for window in path.windows(order + 1) {
                *counts
                    .entry(&window[..order])
                    .or_default()
                    .entry(window[order])
                    .or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(ModelError::InsufficientData);
        }

        let mut histories = Vec::with_capacity(counts.len());
        let mut rows = Vec::with_capacity(counts.len());
        let mut row_totals = Vec::with_capacity(counts.len());
        for (history, row) in counts {
            histories.push(history.to_vec());
            row_totals.push(row.values().sum());
            rows.push(row.into_iter().collect());
        }
        Ok(Self::assemble(
            kind, order, alpha, states, histories, rows, row_totals,
        ))
    }

    /// Rebuilds a model from dense counts, e.g. when loading a model file.
    ///
    /// `states` must be strictly increasing; every history must have `order`
    /// known states and the histories must be distinct.
    pub fn from_counts(
        kind: PathKind,
        order: usize,
        alpha: f64,
        states: Vec<String>,
        histories: Vec<Vec<String>>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, ModelError> {
        check_params(order, alpha)?;
        if states.is_empty() {
            return Err(ModelError::InvalidModel("empty state space".into()));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidModel(
                "states must be sorted and distinct".into(),
            ));
        }
        if histories.len() != counts.len() {
            return Err(ModelError::InvalidModel(format!(
                "{} histories but {} count rows",
                histories.len(),
                counts.len()
            )));
        }
        let space = StateSpace::from_labels(&states);

        let mut keyed: BTreeMap<Vec<usize>, Vec<(usize, u64)>> = BTreeMap::new();
        for (history, row) in histories.iter().zip(counts) {
            if history.len() != order {
                return Err(ModelError::HistoryLength {
                    expected: order,
                    got: history.len(),
                });
            }
            if row.len() != space.len() {
                return Err(ModelError::InvalidModel(format!(
                    "count row has {} cells, expected {}",
                    row.len(),
                    space.len()
                )));
            }
            let h = history
                .iter()
                .map(|l| space.require(l))
                .collect::<Result<Vec<_>, _>>()?;
            let sparse: Vec<(usize, u64)> = row
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .collect();
            if keyed.insert(h, sparse).is_some() {
                return Err(ModelError::InvalidModel("duplicate history".into()));
            }
        }

        let mut hs = Vec::with_capacity(keyed.len());
        let mut rows = Vec::with_capacity(keyed.len());
        let mut totals = Vec::with_capacity(keyed.len());
        for (h, row) in keyed {
            totals.push(row.iter().map(|&(_, c)| c).sum());
            hs.push(h);
            rows.push(row);
        }
        Ok(Self::assemble(kind, order, alpha, space, hs, rows, totals))
    }

    fn assemble(
        kind: PathKind,
        order: usize,
        alpha: f64,
        states: StateSpace,
        histories: Vec<Vec<usize>>,
        rows: Vec<Vec<(usize, u64)>>,
        row_totals: Vec<u64>,
    ) -> Self {
        let history_index = histories
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        TransitionModel {
            kind,
            order,
            alpha,
            states,
            histories,
            history_index,
            rows,
            row_totals,
        }
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    /// Context tuples that were stored with the model, in lexicographic order.
    pub fn histories(&self) -> &[Vec<usize>] {
        &self.histories
    }

    pub fn history_labels(&self, row: usize) -> Vec<&str> {
        self.histories[row]
            .iter()
            .map(|&s| self.states.label(s))
            .collect()
    }

    /// Non-zero counts of a row as `(state index, count)` pairs.
    pub fn row_counts(&self, row: usize) -> &[(usize, u64)] {
        &self.rows[row]
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.row_totals[row]
    }

    pub fn count_at(&self, row: usize, state: usize) -> u64 {
        let r = &self.rows[row];
        r.binary_search_by_key(&state, |&(s, _)| s)
            .map(|i| r[i].1)
            .unwrap_or(0)
    }

    /// Dense count row, one cell per state.
    pub fn dense_counts(&self, row: usize) -> Vec<u64> {
        let mut dense = vec![0; self.states.len()];
        for &(s, c) in &self.rows[row] {
            dense[s] = c;
        }
        dense
    }

    /// Total number of counted windows.
    pub fn n_transitions(&self) -> u64 {
        self.row_totals.iter().sum()
    }

    /// Row index of a history, `None` if it was never observed.
    pub fn find_history<S: AsRef<str>>(&self, history: &[S]) -> Result<Option<usize>, ModelError> {
        let h = self.encode_history(history)?;
        Ok(self.history_index.get(&h).copied())
    }

    fn encode_history<S: AsRef<str>>(&self, history: &[S]) -> Result<Vec<usize>, ModelError> {
        if history.len() != self.order {
            return Err(ModelError::HistoryLength {
                expected: self.order,
                got: history.len(),
            });
        }
        history
            .iter()
            .map(|l| self.states.require(l.as_ref()))
            .collect()
    }

    fn denominator(&self, row: Option<usize>) -> f64 {
        let total = row.map_or(0, |r| self.row_totals[r]);
        total as f64 + self.alpha * self.states.len() as f64
    }

    /// Whether a row would have well-defined probabilities.
    fn row_present(&self, row: Option<usize>) -> bool {
        self.denominator(row) > 0.0
    }

    fn probability_at(&self, row: Option<usize>, next: usize) -> Option<f64> {
        let denom = self.denominator(row);
        if denom <= 0.0 {
            return None;
        }
        let count = row.map_or(0, |r| self.count_at(r, next));
        Some((count as f64 + self.alpha) / denom)
    }

    /// Dense probabilities of a stored row, `None` if the row is absent.
    pub fn row_probabilities(&self, row: usize) -> Option<Vec<f64>> {
        let denom = self.denominator(Some(row));
        if denom <= 0.0 {
            return None;
        }
        Some(
            self.dense_counts(row)
                .into_iter()
                .map(|c| (c as f64 + self.alpha) / denom)
                .collect(),
        )
    }

    pub fn transition_probability<S: AsRef<str>>(
        &self,
        history: &[S],
        next: &str,
    ) -> Result<f64, ModelError> {
        let h = self.encode_history(history)?;
        let next = self.states.require(next)?;
        let row = self.history_index.get(&h).copied();
        self.probability_at(row, next)
            .ok_or_else(|| self.absent(history))
    }

    fn absent<S: AsRef<str>>(&self, history: &[S]) -> ModelError {
        ModelError::AbsentRow(history.iter().map(|s| s.as_ref().to_string()).collect())
    }

    /// The `top` most likely next states, by probability descending then label.
    pub fn predict_top_k<S: AsRef<str>>(
        &self,
        history: &[S],
        top: usize,
    ) -> Result<Vec<(String, f64)>, ModelError> {
        if top == 0 {
            return Err(ModelError::InvalidArgument("top must be positive"));
        }
        let h = self.encode_history(history)?;
        let row = self.history_index.get(&h).copied();
        if !self.row_present(row) {
            return Err(self.absent(history));
        }
        let mut ranked: Vec<(usize, f64)> = (0..self.states.len())
            .map(|s| (s, self.probability_at(row, s).unwrap_or(0.0)))
            .collect();
        // State indices follow label order, so the index is the lexicographic tie-break.
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(top);
        Ok(ranked
            .into_iter()
            .map(|(s, p)| (self.states.label(s).to_string(), p))
            .collect())
    }

    /// Draws `n_paths` walks of `len` labels each from a seeded ChaCha8 stream.
    pub fn sample_paths(
        &self,
        n_paths: usize,
        len: usize,
        seed: u64,
        start: &StartDistribution,
    ) -> Result<Vec<InteractionPath>, ModelError> {
        if n_paths == 0 || len == 0 {
            return Err(ModelError::InvalidArgument(
                "n_paths and len must be positive",
            ));
        }
        if len < self.order {
            return Err(ModelError::InvalidArgument(
                "len must be at least the model order",
            ));
        }
        let starts: Vec<(Vec<usize>, f64)> = match start {
            StartDistribution::Empirical => self
                .histories
                .iter()
                .zip(&self.row_totals)
                .map(|(h, &t)| (h.clone(), t as f64))
                .collect(),
            StartDistribution::Fixed(h) => vec![(self.encode_history(h)?, 1.0)],
            StartDistribution::Weighted(ws) => ws
                .iter()
                .map(|(h, w)| Ok((self.encode_history(h)?, *w)))
                .collect::<Result<_, ModelError>>()?,
        };
        let start_total: f64 = starts.iter().map(|(_, w)| w).sum();
        if starts.iter().any(|(_, w)| !w.is_finite() || *w < 0.0)
            || start_total.is_nan()
            || start_total <= 0.0
        {
            return Err(ModelError::InvalidArgument(
                "start weights must be non-negative with a positive sum",
            ));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = decimal_width(n_paths);
        let mut out = Vec::with_capacity(n_paths);
        for i in 0..n_paths {
            let pick = pick_weighted(&starts, start_total, unit(&mut rng));
            let mut walk: Vec<usize> = starts[pick].0.clone();
            while walk.len() < len {
                let context = &walk[walk.len() - self.order..];
                let row = self.history_index.get(context).copied();
                let next = self.draw_next(row, unit(&mut rng)).ok_or_else(|| {
                    ModelError::AbsentRow(
                        context
                            .iter()
                            .map(|&s| self.states.label(s).to_string())
                            .collect(),
                    )
                })?;
                walk.push(next);
            }
            walk.truncate(len);
            out.push(InteractionPath {
                owner: format!("sample-{i:0width$}"),
                kind: self.kind,
                labels: walk
                    .into_iter()
                    .map(|s| self.states.label(s).to_string())
                    .collect(),
            });
        }
        Ok(out)
    }

    /// Inverse-CDF draw over the row's unnormalized weights `count + alpha`.
    fn draw_next(&self, row: Option<usize>, u: f64) -> Option<usize> {
        let denom = self.denominator(row);
        if denom <= 0.0 {
            return None;
        }
        let target = u * denom;
        let mut acc = 0.0;
        if self.alpha == 0.0 {
            let cells = &self.rows[row?];
            for &(s, c) in cells {
                acc += c as f64;
                if target < acc {
                    return Some(s);
                }
            }
            return cells.last().map(|&(s, _)| s);
        }
        for s in 0..self.states.len() {
            acc += row.map_or(0, |r| self.count_at(r, s)) as f64 + self.alpha;
            if target < acc {
                return Some(s);
            }
        }
        Some(self.states.len() - 1)
    }

    /// Sum of natural-log transition probabilities over every window of every path.
    pub fn log_likelihood(&self, paths: &[InteractionPath]) -> Result<LogLikelihood, ModelError> {
        let mut value = 0.0;
        let mut windows = 0;
        let mut zero = 0;
        for path in paths {
            let encoded = path
                .labels
                .iter()
                .map(|l| self.states.require(l))
                .collect::<Result<Vec<_>, _>>()?;
            for w in encoded.windows(self.order + 1) {
                windows += 1;
                let row = self.history_index.get(&w[..self.order]).copied();
                match self.probability_at(row, w[self.order]) {
                    Some(p) if p > 0.0 => value += libm::log(p),
                    _ => zero += 1,
                }
            }
        }
        Ok(LogLikelihood {
            value: if zero > 0 { f64::NEG_INFINITY } else { value },
            windows,
            zero_probability_windows: zero,
        })
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn pick_weighted<T>(items: &[(T, f64)], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    for (i, (_, w)) in items.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    items.len() - 1
}

fn decimal_width(mut n: usize) -> usize {
    let mut width = 1;
    while n >= 10 {
        n /= 10;
        width += 1;
    }
    width
}

/// Composite label for a tuple of states, e.g. `(A,B)`.
pub fn tuple_label<S: AsRef<str>>(states: &[S]) -> String {
    let mut out = String::from("(");
    for (i, s) in states.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(s.as_ref());
    }
    out.push(')');
    out
}

/// Rewrites each path as overlapping `k`-tuples so that a first-order fit
/// on the result matches an order-`k` fit on the input. Paths shorter than
/// `k` are dropped; `k <= 1` returns the paths unchanged.
pub fn expand_order(paths: &[InteractionPath], k: usize) -> Vec<InteractionPath> {
    if k <= 1 {
        return paths.to_vec();
    }
    paths
        .iter()
        .filter(|p| p.labels.len() >= k)
        .map(|p| InteractionPath {
            owner: p.owner.clone(),
            kind: p.kind,
            labels: p.labels.windows(k).map(tuple_label).collect(),
        })
        .collect()
}

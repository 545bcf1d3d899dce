//! Contribution histograms and inequality measures.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::paths::InteractionPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("distribution needs at least two entries, has {0}")]
    DegenerateDistribution(usize),
    #[error("distribution has no positive count")]
    Empty,
}

/// Non-negative counts per label.
///
/// Every supplied entry counts toward the distribution length, including
/// explicit zeros (a roster of users who made no change).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributionDistribution {
    entries: BTreeMap<String, u64>,
    total: u64,
}

impl ContributionDistribution {
    pub fn new(entries: BTreeMap<String, u64>) -> Result<Self, MetricsError> {
        let total = entries.values().sum();
        if total == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(ContributionDistribution { entries, total })
    }

    pub fn from_counts<I, S>(counts: I) -> Result<Self, MetricsError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for (label, c) in counts {
            *entries.entry(label.into()).or_insert(0) += c;
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &BTreeMap<String, u64> {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> u64 {
        self.entries.get(label).copied().unwrap_or(0)
    }

    /// Shannon entropy divided by `ln n`, where `n` is the number of entries.
    ///
    /// 1 for a perfectly even distribution, 0 when one entry holds everything.
    pub fn normalized_entropy(&self) -> Result<f64, MetricsError> {
        let n = self.entries.len();
        if n < 2 {
            return Err(MetricsError::DegenerateDistribution(n));
        }
        let mut counts: Vec<u64> = self.entries.values().copied().collect();
        counts.sort_unstable();
        // Equal shares are exactly 1; the float sum would only get within an ulp.
        if counts[0] == counts[n - 1] {
            return Ok(1.0);
        }
        // Summing in count order makes the result independent of label order.
        let total = self.total as f64;
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * libm::log(p)
            })
            .sum();
        Ok((h / libm::log(n as f64)).clamp(0.0, 1.0))
    }

    /// Population Gini coefficient, `sum_ij |x_i - x_j| / (2 n sum x)`.
    ///
    /// Evaluated on the sorted counts as `sum_i (2i - n - 1) x_(i) / (n sum x)`.
    pub fn gini_coefficient(&self) -> Result<f64, MetricsError> {
        let n = self.entries.len();
        if n < 2 {
            return Err(MetricsError::DegenerateDistribution(n));
        }
        let mut xs: Vec<u64> = self.entries.values().copied().collect();
        xs.sort_unstable();
        // Integer accumulation keeps the result exact up to the final division.
        let weighted: i128 = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (2 * (i as i128 + 1) - n as i128 - 1) * x as i128)
            .sum();
        Ok(weighted as f64 / (n as f64 * self.total as f64))
    }
}

/// Occurrences of every label across all path elements.
pub fn state_histogram(
    paths: &[InteractionPath],
) -> Result<ContributionDistribution, MetricsError> {
    let mut entries: BTreeMap<String, u64> = BTreeMap::new();
    for p in paths {
        for l in &p.labels {
            if let Some(c) = entries.get_mut(l) {
                *c += 1;
            } else {
                entries.insert(l.clone(), 1);
            }
        }
    }
    ContributionDistribution::new(entries)
}

//! Partitions, contingency tables and the Adjusted Rand Index.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Label reserved for scatter (removed outliers).
pub const SCATTER: u32 = 0;

/// A hard assignment of `n` observations to clusters `1..=k`; label `0`
/// marks scatter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<u32>,
    k: usize,
}

impl Partition {
    /// Validates that every id in `1..=max` is used.
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut seen = alloc::vec![false; k + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = (1..=k).find(|&c| !seen[c]) {
            return Err(invalid(alloc::format!("cluster id {missing} is unused")));
        }
        Ok(Self { labels, k })
    }

    /// Relabels arbitrary ids to `1..=k` in order of first appearance.
    /// `SCATTER` passes through unchanged.
    pub fn canonical(raw: &[u32]) -> Self {
        let mut map: Vec<(u32, u32)> = Vec::new();
        let labels = raw
            .iter()
            .map(|&l| {
                if l == SCATTER {
                    return SCATTER;
                }
                match map.iter().find(|(from, _)| *from == l) {
                    Some(&(_, to)) => to,
                    None => {
                        let to = map.len() as u32 + 1;
                        map.push((l, to));
                        to
                    }
                }
            })
            .collect();
        Self {
            labels,
            k: map.len(),
        }
    }

    /// Canonical partition from 0-based cluster indices (no scatter).
    pub fn from_indices(raw: &[usize]) -> Self {
        let shifted: Vec<u32> = raw.iter().map(|&c| c as u32 + 1).collect();
        Self::canonical(&shifted)
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of non-scatter clusters.
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scatter_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == SCATTER).count()
    }

    /// Cluster sizes indexed by label (`sizes[0]` is the scatter count).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k + 1];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Member indices of each cluster `1..=k` (position `c − 1`).
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != SCATTER {
                out[l as usize - 1].push(i);
            }
        }
        out
    }

    /// Restricts the partition to `indices` and relabels canonically.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let raw: Vec<u32> = indices.iter().map(|&i| self.labels[i]).collect();
        Self::canonical(&raw)
    }
}

/// How scatter observations enter a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatterMode {
    /// Scatter is one ordinary group.
    #[default]
    AsGroup,
    /// Only observations that are non-scatter in both partitions are compared.
    Exclude,
}

/// Co-occurrence counts between two labelings.
///
/// Rows follow the sorted distinct labels of the first partition, columns
/// those of the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub row_labels: Vec<u32>,
    pub col_labels: Vec<u32>,
    /// Row-major `rows × cols` counts.
    pub counts: Vec<u64>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols() + c]
    }
}

fn sorted_distinct(labels: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut v: Vec<u32> = labels.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Contingency table of `a` against `b`, scatter counted as its own group.
pub fn contingency(a: &Partition, b: &Partition) -> Result<ContingencyTable> {
    contingency_with(a, b, ScatterMode::AsGroup)
}

pub fn contingency_with(a: &Partition, b: &Partition, mode: ScatterMode) -> Result<ContingencyTable> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let keep = |i: usize| mode == ScatterMode::AsGroup || (a.labels[i] != SCATTER && b.labels[i] != SCATTER);
    let pairs: Vec<(u32, u32)> = (0..a.len())
        .filter(|&i| keep(i))
        .map(|i| (a.labels[i], b.labels[i]))
        .collect();
    let row_labels = sorted_distinct(pairs.iter().map(|p| p.0));
    let col_labels = sorted_distinct(pairs.iter().map(|p| p.1));
    let (rows, cols) = (row_labels.len(), col_labels.len());
    let mut counts = alloc::vec![0u64; rows * cols];
    for &(x, y) in &pairs {
        let r = row_labels.binary_search(&x).unwrap_or_default();
        let c = col_labels.binary_search(&y).unwrap_or_default();
        counts[r * cols + c] += 1;
    }
    let row_sums = (0..rows).map(|r| counts[r * cols..(r + 1) * cols].iter().sum()).collect();
    let col_sums = (0..cols).map(|c| (0..rows).map(|r| counts[r * cols + c]).sum()).collect();
    Ok(ContingencyTable {
        row_labels,
        col_labels,
        counts,
        row_sums,
        col_sums,
        total: pairs.len() as u64,
    })
}

#[inline]
fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Hubert–Arabie Adjusted Rand Index with scatter treated as one group.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    ari_with(a, b, ScatterMode::AsGroup)
}

pub fn ari_with(a: &Partition, b: &Partition, mode: ScatterMode) -> Result<f64> {
    let table = contingency_with(a, b, mode)?;
    if table.total < 2 {
        return Err(invalid("the adjusted Rand index needs at least 2 compared observations"));
    }
    let index: f64 = table.counts.iter().map(|&c| choose2(c)).sum();
    let sum_a: f64 = table.row_sums.iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = table.col_sums.iter().map(|&c| choose2(c)).sum();
    Ok(ari_from_pair_sums(index, sum_a, sum_b, choose2(table.total)))
}

/// ARI from the pair sums `Σ C(n_ij,2)`, `Σ C(a_i,2)`, `Σ C(b_j,2)` and `C(n,2)`.
///
/// When the index is undefined (both labelings are all-one-group or both
/// all-singletons) the labelings agree on every pair and the result is 1.
pub fn ari_from_pair_sums(index: f64, sum_a: f64, sum_b: f64, total_pairs: f64) -> f64 {
    let expected = sum_a * sum_b / total_pairs;
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        if index == max {
            1.0
        } else {
            0.0
        }
    } else {
        (index - expected) / denom
    }
}

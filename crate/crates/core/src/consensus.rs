//! Co-association (similarity) matrices over candidate partitions, the
//! thresholded-dendrogram estimate of the number of clusters, and the
//! mean-ARI choice of a final partition.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::sqrt;
use crate::partition::{adjusted_rand_index, Partition, SCATTER};
use crate::{par, rng};

/// Default co-association threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Default number of consensus replicates.
pub const DEFAULT_REPLICATES: usize = 100;
/// Default cap on the replicate subsample size.
pub const DEFAULT_SUBSAMPLE: usize = 500;

// Co-association values are ratios of small integers; guard the cut height
// against representation error in 1 − ψ.
const CUT_EPS: f64 = 1e-12;

/// `ψ_ij = n_ij / N`: the fraction of `N` partitions placing observations
/// `i` and `j` in the same (non-scatter) cluster. The diagonal is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    n: usize,
    counts: Vec<u32>,
    partitions: usize,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of contributing partitions `N`.
    pub fn partitions(&self) -> usize {
        self.partitions
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    #[inline]
    pub fn psi(&self, i: usize, j: usize) -> f64 {
        self.count(i, j) as f64 / self.partitions as f64
    }

    /// Mean and coefficient of variation of the off-diagonal entries.
    pub fn off_diagonal_stats(&self) -> (f64, f64) {
        let n = self.n;
        let pairs = (n * (n - 1) / 2) as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.psi(i, j);
                s += v;
                s2 += v * v;
            }
        }
        let mean = s / pairs;
        let var = (s2 / pairs - mean * mean).max(0.0);
        let cv = if mean > 0.0 { sqrt(var) / mean } else { f64::INFINITY };
        (mean, cv)
    }

    /// The matrix restricted to `indices` (in that order).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut counts = alloc::vec![0u32; m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                counts[a * m + b] = self.count(i, j);
            }
        }
        Self {
            n: m,
            counts,
            partitions: self.partitions,
        }
    }
}

/// Builds `ψ` from partitions over the same observations.
pub fn build_similarity(partitions: &[Partition]) -> Result<SimilarityMatrix> {
    let n = partitions.first().map(Partition::len).ok_or_else(|| invalid("no partitions given"))?;
    let all: Vec<usize> = (0..n).collect();
    build_similarity_on(partitions, &all)
}

/// Builds `ψ` over the observations `indices` only.
pub fn build_similarity_on(partitions: &[Partition], indices: &[usize]) -> Result<SimilarityMatrix> {
    let first = partitions.first().ok_or_else(|| invalid("no partitions given"))?;
    if partitions.iter().any(|p| p.len() != first.len()) {
        return Err(invalid("partitions cover different numbers of observations"));
    }
    if indices.iter().any(|&i| i >= first.len()) {
        return Err(invalid("observation index out of range"));
    }
    let m = indices.len();
    let mut counts = alloc::vec![0u32; m * m];
    for p in partitions {
        let labels = p.labels();
        for (a, &i) in indices.iter().enumerate() {
            let li = labels[i];
            if li == SCATTER {
                continue;
            }
            for (b, &j) in indices.iter().enumerate().skip(a + 1) {
                if labels[j] == li {
                    counts[a * m + b] += 1;
                    counts[b * m + a] += 1;
                }
            }
        }
    }
    let n_parts = partitions.len() as u32;
    for a in 0..m {
        counts[a * m + a] = n_parts;
    }
    Ok(SimilarityMatrix {
        n: m,
        counts,
        partitions: partitions.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Complete,
}

/// Single linkage is used when the off-diagonal `ψ` have mean below
/// `mean_cut` or coefficient of variation above `cv_cut`; complete otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageCutoffs {
    pub mean_cut: f64,
    pub cv_cut: f64,
}

impl Default for LinkageCutoffs {
    fn default() -> Self {
        Self {
            mean_cut: 0.3,
            cv_cut: 1.0,
        }
    }
}

pub fn choose_linkage(psi: &SimilarityMatrix, cutoffs: LinkageCutoffs) -> Linkage {
    let (mean, cv) = psi.off_diagonal_stats();
    if mean < cutoffs.mean_cut || cv > cutoffs.cv_cut {
        Linkage::Single
    } else {
        Linkage::Complete
    }
}

/// Clusters of the `1 − ψ` dendrogram cut at height `1 − threshold`.
pub fn estimate_kstar_once(psi: &SimilarityMatrix, threshold: f64, cutoffs: LinkageCutoffs) -> Result<usize> {
    estimate_kstar_detail(psi, threshold, cutoffs).map(|(k, _)| k)
}

pub fn estimate_kstar_detail(
    psi: &SimilarityMatrix,
    threshold: f64,
    cutoffs: LinkageCutoffs,
) -> Result<(usize, Linkage)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold must lie in (0, 1)"));
    }
    if psi.n() < 2 {
        return Err(invalid("need at least 2 observations"));
    }
    let linkage = choose_linkage(psi, cutoffs);
    let cut = 1.0 - threshold + CUT_EPS;
    let merged = match linkage {
        Linkage::Single => single_linkage_heights(psi),
        Linkage::Complete => complete_linkage_heights(psi),
    }
    .iter()
    .filter(|&&h| h <= cut)
    .count();
    Ok((psi.n() - merged, linkage))
}

/// Single-linkage merge heights of `1 − ψ` as minimum-spanning-tree edges
/// `(u, v, height)` sorted ascending (Prim, `O(n²)`).
pub fn single_linkage_edges(psi: &SimilarityMatrix) -> Vec<(usize, usize, f64)> {
    let n = psi.n();
    let mut in_tree = alloc::vec![false; n];
    let mut best = alloc::vec![f64::INFINITY; n];
    let mut parent = alloc::vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = 1.0 - psi.psi(current, v);
            if d < best[v] {
                best[v] = d;
                parent[v] = current;
            }
            if best[v] < next_d {
                next_d = best[v];
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push((parent[next].min(next), parent[next].max(next), next_d));
        current = next;
    }
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    edges
}

fn single_linkage_heights(psi: &SimilarityMatrix) -> Vec<f64> {
    single_linkage_edges(psi).into_iter().map(|e| e.2).collect()
}

// Complete linkage by the nearest-neighbor chain, O(n²).
fn complete_linkage_heights(psi: &SimilarityMatrix) -> Vec<f64> {
    let n = psi.n();
    let mut d: Vec<f64> = (0..n * n).map(|k| 1.0 - psi.psi(k / n, k % n)).collect();
    let mut active = alloc::vec![true; n];
    let mut heights = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    for _ in 1..n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap_or(0));
        }
        let (a, b) = loop {
            let a = *chain.last().unwrap_or(&0);
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            let mut nn = prev;
            let mut nn_d = prev.map_or(f64::INFINITY, |p| d[a * n + p]);
            for x in 0..n {
                if active[x] && x != a && d[a * n + x] < nn_d {
                    nn_d = d[a * n + x];
                    nn = Some(x);
                }
            }
            let b = nn.unwrap_or(a);
            if Some(b) == prev {
                break (a, b);
            }
            chain.push(b);
        };
        chain.pop();
        chain.pop();
        heights.push(d[a * n + b]);
        let (keep, drop) = (a.min(b), a.max(b));
        active[drop] = false;
        for x in 0..n {
            if active[x] && x != keep {
                let v = d[keep * n + x].max(d[drop * n + x]);
                d[keep * n + x] = v;
                d[x * n + keep] = v;
            }
        }
    }
    heights
}

/// Leaf order of the single-linkage dendrogram of `1 − ψ`; when two groups
/// join, the one holding the smaller observation index comes first.
pub fn dendrogram_order(psi: &SimilarityMatrix) -> Vec<usize> {
    let n = psi.n();
    let mut owner: Vec<usize> = (0..n).collect();
    let mut leaves: Vec<Vec<usize>> = (0..n).map(|i| alloc::vec![i]).collect();
    for (u, v, _) in single_linkage_edges(psi) {
        let (a, b) = (owner[u], owner[v]);
        let (first, second) = if leaves[a][0] <= leaves[b][0] { (a, b) } else { (b, a) };
        let moved = core::mem::take(&mut leaves[second]);
        for &x in &moved {
            owner[x] = first;
        }
        leaves[first].extend(moved);
    }
    leaves.into_iter().find(|l| l.len() == n).unwrap_or_default()
}

/// Replicated `K*` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct KStarEstimate {
    pub per_replicate: Vec<usize>,
    /// Lower median of `per_replicate`.
    pub median_kstar: usize,
    /// `(K*, fraction)` pairs, ascending in `K*`.
    pub frequencies: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusOptions {
    pub threshold: f64,
    pub cutoffs: LinkageCutoffs,
}

impl Default for ConsensusOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            cutoffs: LinkageCutoffs::default(),
        }
    }
}

/// `b` replicates, each on a uniform subsample of `subsample` observations.
pub fn estimate_kstar(
    partitions: &[Partition],
    b: usize,
    subsample: usize,
    seed: u64,
    opts: ConsensusOptions,
) -> Result<KStarEstimate> {
    let n = partitions.first().map(Partition::len).ok_or_else(|| invalid("no partitions given"))?;
    if b == 0 {
        return Err(invalid("B must be at least 1"));
    }
    if subsample < 2 || subsample > n {
        return Err(invalid(alloc::format!("subsample = {subsample} must lie in 2..={n}")));
    }
    let per: Vec<Result<usize>> = par::map_range(b, |r| {
        let indices = subsample_indices(n, subsample, seed, r as u64);
        let psi = build_similarity_on(partitions, &indices)?;
        estimate_kstar_once(&psi, opts.threshold, opts.cutoffs)
    });
    let per_replicate: Vec<usize> = per.into_iter().collect::<Result<_>>()?;
    Ok(summarize(per_replicate))
}

/// Sorted uniform subsample of `m` out of `n` for replicate `r`.
pub fn subsample_indices(n: usize, m: usize, seed: u64, r: u64) -> Vec<usize> {
    if m >= n {
        return (0..n).collect();
    }
    let mut g = rng::substream(seed, rng::tag::CONSENSUS, r);
    let mut v = rand::seq::index::sample(&mut g, n, m).into_vec();
    v.sort_unstable();
    v
}

fn summarize(per_replicate: Vec<usize>) -> KStarEstimate {
    let mut sorted = per_replicate.clone();
    sorted.sort_unstable();
    let median_kstar = sorted[(sorted.len() - 1) / 2];
    let mut frequencies: Vec<(usize, f64)> = Vec::new();
    for &k in &sorted {
        match frequencies.last_mut() {
            Some((last, c)) if *last == k => *c += 1.0,
            _ => frequencies.push((k, 1.0)),
        }
    }
    let total = sorted.len() as f64;
    frequencies.iter_mut().for_each(|(_, c)| *c /= total);
    KStarEstimate {
        per_replicate,
        median_kstar,
        frequencies,
    }
}

/// The candidate maximizing mean ARI against all candidates (self included).
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Row-major `N × N` pairwise ARI.
    pub ari: Vec<f64>,
    pub mean_ari: Vec<f64>,
}

/// Picks the partition most similar to all others; ties go to the lowest
/// index.
pub fn select_best_partition(partitions: &[Partition]) -> Result<Selection> {
    let n = partitions.len();
    if n < 2 {
        return Err(invalid("need at least 2 candidate partitions"));
    }
    let rows: Vec<Result<Vec<f64>>> = par::map_range(n, |i| {
        (0..n)
            .map(|j| {
                if i == j {
                    Ok(1.0)
                } else {
                    // evaluate each pair in one orientation so the matrix is exactly symmetric
                    let (a, b) = (i.min(j), i.max(j));
                    adjusted_rand_index(&partitions[a], &partitions[b])
                }
            })
            .collect()
    });
    let mut ari = Vec::with_capacity(n * n);
    for row in rows {
        ari.extend(row?);
    }
    let mean_ari: Vec<f64> = (0..n).map(|i| ari[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let mut index = 0;
    for (i, &w) in mean_ari.iter().enumerate() {
        if w > mean_ari[index] {
            index = i;
        }
    }
    Ok(Selection { index, ari, mean_ari })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l: &[u32]) -> Partition {
        Partition::new(l.to_vec()).unwrap()
    }

    fn blocks(sizes: &[usize]) -> Partition {
        let raw: Vec<u32> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| core::iter::repeat_n(c as u32 + 1, s))
            .collect();
        Partition::new(raw).unwrap()
    }

    #[test]
    fn similarity_hand_count() {
        let s = build_similarity(&[p(&[1, 1, 2]), p(&[1, 2, 2])]).unwrap();
        assert_eq!(s.psi(0, 1), 0.5);
        assert_eq!(s.psi(0, 2), 0.0);
        assert_eq!(s.psi(1, 2), 0.5);
        assert_eq!(s.psi(2, 2), 1.0);
        assert!(build_similarity(&[]).is_err());
    }

    #[test]
    fn identical_partitions_give_block_matrix() {
        let part = p(&[1, 2, 1, 3, 2]);
        let s = build_similarity(&vec![part.clone(); 4]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let same = part.labels()[i] == part.labels()[j];
                assert_eq!(s.psi(i, j), if same { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn scatter_never_co_associates() {
        let s = build_similarity(&[p(&[0, 0, 1, 1])]).unwrap();
        assert_eq!(s.psi(0, 1), 0.0);
        assert_eq!(s.psi(0, 0), 1.0);
        assert_eq!(s.psi(2, 3), 1.0);
    }

    #[test]
    fn kstar_once_examples() {
        let two = build_similarity(&[blocks(&[4, 5])]).unwrap();
        let cut = LinkageCutoffs::default();
        assert_eq!(estimate_kstar_once(&two, 0.5, cut).unwrap(), 2);
        // force each linkage
        let single = LinkageCutoffs { mean_cut: 2.0, cv_cut: 0.0 };
        let complete = LinkageCutoffs { mean_cut: -1.0, cv_cut: f64::INFINITY };
        assert_eq!(estimate_kstar_detail(&two, 0.5, single).unwrap(), (2, Linkage::Single));
        assert_eq!(estimate_kstar_detail(&two, 0.5, complete).unwrap(), (2, Linkage::Complete));

        let ones = build_similarity(&[blocks(&[6])]).unwrap();
        assert_eq!(estimate_kstar_once(&ones, 0.5, cut).unwrap(), 1);

        // three blocks; every pair of blocks co-clustered in 3 of 5 partitions (ψ = 0.6)
        let parts = [
            blocks(&[3, 3, 3]),
            blocks(&[3, 3, 3]),
            blocks(&[9]),
            blocks(&[9]),
            blocks(&[9]),
        ];
        let s = build_similarity(&parts).unwrap();
        assert!((s.psi(0, 4) - 0.6).abs() < 1e-15);
        for c in [single, complete] {
            assert_eq!(estimate_kstar_once(&s, 0.5, c).unwrap(), 1);
        }
        assert!(estimate_kstar_once(&s, 1.0, cut).is_err());
    }

    #[test]
    fn complete_and_single_differ_on_chains() {
        // chain 0-1-2: ψ(0,1) = ψ(1,2) = 1, ψ(0,2) = 0
        let parts = [p(&[1, 1, 2]), p(&[1, 2, 2])];
        let s = build_similarity(&parts).unwrap();
        let single = LinkageCutoffs { mean_cut: 2.0, cv_cut: 0.0 };
        let complete = LinkageCutoffs { mean_cut: -1.0, cv_cut: f64::INFINITY };
        assert_eq!(estimate_kstar_once(&s, 0.5, single).unwrap(), 1);
        assert_eq!(estimate_kstar_once(&s, 0.5, complete).unwrap(), 2);
    }

    #[test]
    fn replicate_summary() {
        let part = blocks(&[10, 10, 10]);
        let est = estimate_kstar(&vec![part; 3], 5, 30, 9, ConsensusOptions::default()).unwrap();
        assert_eq!(est.per_replicate, vec![3; 5]);
        assert_eq!(est.median_kstar, 3);
        assert_eq!(est.frequencies, vec![(3, 1.0)]);

        let s = summarize(vec![4, 2, 3, 5]);
        assert_eq!(s.median_kstar, 3);
        assert_eq!(s.frequencies, vec![(2, 0.25), (3, 0.25), (4, 0.25), (5, 0.25)]);
    }

    #[test]
    fn selection_examples() {
        let a = p(&[1, 1, 2, 2]);
        let b = p(&[1, 2, 3, 4]);
        let sel = select_best_partition(&[a.clone(), a.clone(), b.clone()]).unwrap();
        assert_eq!(sel.index, 0);
        assert!((sel.mean_ari[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((sel.mean_ari[2] - 1.0 / 3.0).abs() < 1e-15);

        let sel = select_best_partition(&[b.clone(), b.clone(), b]).unwrap();
        assert_eq!(sel.index, 0);
        assert!(select_best_partition(&[a]).is_err());
    }

    #[test]
    fn dendrogram_order_keeps_blocks_contiguous() {
        let part = p(&[1, 2, 1, 2, 1, 2]);
        let s = build_similarity(&[part.clone()]).unwrap();
        let order = dendrogram_order(&s);
        assert_eq!(order.len(), 6);
        let labels: Vec<u32> = order.iter().map(|&i| part.labels()[i]).collect();
        assert_eq!(labels, vec![1, 1, 1, 2, 2, 2]);
    }
}

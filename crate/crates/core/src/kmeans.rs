//! Multi-start Lloyd K-means and the Krzanowski–Lai criterion.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::{cmp_rows, DataMatrix};
use crate::error::{invalid, Result};
use crate::math::{powf, sq_dist};
use crate::partition::Partition;
use crate::{par, rng};

/// Default sweep cap.
pub const MAX_ITER: usize = 100;

/// How initial centers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// `K` distinct observations sampled uniformly.
    #[default]
    RandomSample,
    /// Deterministic maximin: start from the point farthest from the grand
    /// mean, then repeatedly add the point farthest from the chosen centers.
    FarthestPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub init: Init,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: MAX_ITER,
            init: Init::RandomSample,
        }
    }
}

/// A converged (or capped) K-means solution.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub partition: Partition,
    /// Row-major `k × p` cluster means.
    pub centers: Vec<f64>,
    pub k: usize,
    /// Within-group sum of squares around `centers`.
    pub wgss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Within-group sum of squares after each mean update.
    pub history: Vec<f64>,
}

impl KMeansResult {
    pub fn center(&self, c: usize) -> &[f64] {
        let p = self.centers.len() / self.k;
        &self.centers[c * p..(c + 1) * p]
    }
}

fn validate_k(data: &DataMatrix, k: usize) -> Result<()> {
    if k == 0 || k > data.n() {
        return Err(invalid(alloc::format!("k = {k} must lie in 1..={}", data.n())));
    }
    let distinct = data.distinct_rows();
    if k > distinct {
        return Err(invalid(alloc::format!(
            "k = {k} exceeds the {distinct} distinct observations"
        )));
    }
    Ok(())
}

/// Single Lloyd run seeded by `seed`.
pub fn lloyd(data: &DataMatrix, k: usize, seed: u64) -> Result<KMeansResult> {
    validate_k(data, k)?;
    let mut r = rng::substream(seed, rng::tag::RESTART, 0);
    Ok(lloyd_with(data, k, &mut r, KMeansOptions::default()))
}

/// Lloyd iterations from an initialization drawn with `rng`. Assumes `k` has
/// been validated against the data.
pub fn lloyd_with(data: &DataMatrix, k: usize, rng: &mut rng::Rng, opts: KMeansOptions) -> KMeansResult {
    let p = data.p();
    let mut centers = match opts.init {
        Init::RandomSample => sample_distinct(data, k, rng),
        Init::FarthestPoint => farthest_point(data, k),
    };
    let mut labels = alloc::vec![0usize; data.n()];
    assign(data, &centers, k, &mut labels);
    let mut history = Vec::new();
    let mut iterations = 1;
    let mut converged = false;
    loop {
        update_means(data, k, &mut labels, &mut centers);
        history.push(wgss(data, &centers, &labels, p));
        if iterations >= opts.max_iter {
            break;
        }
        let changed = assign(data, &centers, k, &mut labels);
        iterations += 1;
        if changed == 0 {
            converged = true;
            break;
        }
    }
    let total = *history.last().unwrap_or(&0.0);
    KMeansResult {
        partition: Partition::from_indices(&labels),
        centers: reorder_centers(&centers, &labels, k, p),
        k,
        wgss: total,
        iterations,
        converged,
        history,
    }
}

// Centers in the order of canonical labels (first appearance).
fn reorder_centers(centers: &[f64], labels: &[usize], k: usize, p: usize) -> Vec<f64> {
    let mut order = Vec::with_capacity(k);
    let mut seen = alloc::vec![false; k];
    for &l in labels {
        if !seen[l] {
            seen[l] = true;
            order.push(l);
        }
    }
    order.extend((0..k).filter(|&c| !seen[c]));
    order.iter().flat_map(|&c| centers[c * p..(c + 1) * p].iter().copied()).collect()
}

fn sample_distinct(data: &DataMatrix, k: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let n = data.n();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut next = 0;
    while chosen.len() < k && next < n {
        let j = rng.random_range(next..n);
        idx.swap(next, j);
        let cand = idx[next];
        next += 1;
        if chosen
            .iter()
            .all(|&c| cmp_rows(data.row(c), data.row(cand)) != core::cmp::Ordering::Equal)
        {
            chosen.push(cand);
        }
    }
    chosen.iter().flat_map(|&i| data.row(i).iter().copied()).collect()
}

fn farthest_point(data: &DataMatrix, k: usize) -> Vec<f64> {
    let mean = data.column_means();
    let first = argmax((0..data.n()).map(|i| sq_dist(data.row(i), &mean)));
    let mut centers: Vec<f64> = data.row(first).to_vec();
    let mut nearest: Vec<f64> = data.rows().map(|r| sq_dist(r, data.row(first))).collect();
    for _ in 1..k {
        let pick = argmax(nearest.iter().copied());
        let row = data.row(pick).to_vec();
        for (d, r) in nearest.iter_mut().zip(data.rows()) {
            *d = d.min(sq_dist(r, &row));
        }
        centers.extend(row);
    }
    centers
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

// Nearest center, ties to the lowest index. Returns the number of changes.
fn assign(data: &DataMatrix, centers: &[f64], k: usize, labels: &mut [usize]) -> usize {
    let p = data.p();
    let mut changed = 0;
    for (i, row) in data.rows().enumerate() {
        let mut best = (0, f64::INFINITY);
        for c in 0..k {
            let d = sq_dist(row, &centers[c * p..(c + 1) * p]);
            if d < best.1 {
                best = (c, d);
            }
        }
        if labels[i] != best.0 {
            labels[i] = best.0;
            changed += 1;
        }
    }
    changed
}

// Recomputes means; an emptied cluster takes over the point farthest from
// its current center.
fn update_means(data: &DataMatrix, k: usize, labels: &mut [usize], centers: &mut [f64]) {
    let p = data.p();
    loop {
        let mut sums = alloc::vec![0.0; k * p];
        let mut counts = alloc::vec![0usize; k];
        for (row, &l) in data.rows().zip(labels.iter()) {
            counts[l] += 1;
            for (s, v) in sums[l * p..(l + 1) * p].iter_mut().zip(row) {
                *s += v;
            }
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            for c in 0..k {
                for j in 0..p {
                    centers[c * p + j] = sums[c * p + j] / counts[c] as f64;
                }
            }
            return;
        };
        let far = argmax(data.rows().zip(labels.iter()).map(|(row, &l)| {
            if counts[l] > 1 {
                sq_dist(row, &centers[l * p..(l + 1) * p])
            } else {
                f64::NEG_INFINITY
            }
        }));
        labels[far] = empty;
        centers[empty * p..(empty + 1) * p].copy_from_slice(data.row(far));
    }
}

fn wgss(data: &DataMatrix, centers: &[f64], labels: &[usize], p: usize) -> f64 {
    data.rows()
        .zip(labels)
        .map(|(row, &l)| sq_dist(row, &centers[l * p..(l + 1) * p]))
        .sum()
}

/// Best of `starts` independent Lloyd runs (smallest wgss; ties to the
/// earliest run). Run `r` uses substream `r` of `seed`, so the runs of a
/// smaller `starts` are a prefix of those of a larger one.
pub fn best_of(data: &DataMatrix, k: usize, starts: usize, seed: u64) -> Result<KMeansResult> {
    best_of_with(data, k, starts, seed, KMeansOptions::default())
}

pub fn best_of_with(
    data: &DataMatrix,
    k: usize,
    starts: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<KMeansResult> {
    if starts == 0 {
        return Err(invalid("starts must be at least 1"));
    }
    validate_k(data, k)?;
    let starts = if opts.init == Init::FarthestPoint { 1 } else { starts };
    let runs = par::map_range(starts, |r| {
        let mut g = rng::substream(seed, rng::tag::RESTART, r as u64);
        lloyd_with(data, k, &mut g, opts)
    });
    let mut best: Option<KMeansResult> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.wgss < b.wgss) {
            best = Some(run);
        }
    }
    Ok(best.expect("starts ≥ 1"))
}

/// Traces and Krzanowski–Lai statistics over a run of consecutive `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrzanowskiTrace {
    pub k_values: Vec<usize>,
    /// `trace(W_K)`: within-group sum of squares of the best K-means fit.
    pub traces: Vec<f64>,
    /// `Diff(K) = (K−1)^{2/p} trace(W_{K−1}) − K^{2/p} trace(W_K)`, absent
    /// for the first `K`.
    pub diffs: Vec<Option<f64>>,
    /// `C_K = |Diff(K) / Diff(K+1)|` where both exist and `Diff(K+1) ≠ 0`.
    pub ratios: Vec<Option<f64>>,
}

/// Computes the statistics from precomputed traces and returns the `m`
/// values of `K` with the largest `C_K` (descending, ties to smaller `K`).
pub fn krzanowski_from_traces(k_values: &[usize], traces: &[f64], p: usize, m: usize) -> (KrzanowskiTrace, Vec<usize>) {
    let expo = 2.0 / p as f64;
    let scale = traces.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
    let zero_tol = 1e-12 * scale;
    let diffs: Vec<Option<f64>> = (0..k_values.len())
        .map(|i| {
            (i > 0).then(|| {
                let (k0, k1) = (k_values[i - 1] as f64, k_values[i] as f64);
                powf(k0, expo) * traces[i - 1] - powf(k1, expo) * traces[i]
            })
        })
        .collect();
    let ratios: Vec<Option<f64>> = (0..k_values.len())
        .map(|i| match (diffs[i], diffs.get(i + 1).copied().flatten()) {
            (Some(d), Some(next)) if next.abs() > zero_tol => Some((d / next).abs()),
            _ => None,
        })
        .collect();
    let mut ranked: Vec<(usize, f64)> = k_values
        .iter()
        .zip(&ratios)
        .filter_map(|(&k, r)| r.map(|c| (k, c)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let picks = ranked.iter().take(m).map(|&(k, _)| k).collect();
    (
        KrzanowskiTrace {
            k_values: k_values.to_vec(),
            traces: traces.to_vec(),
            diffs,
            ratios,
        },
        picks,
    )
}

/// Runs `best_of` for every `K` in `k_range` (consecutive, ascending) and
/// ranks them by `C_K`. Also returns the fits, aligned with `k_range`.
pub fn krzanowski_candidates(
    data: &DataMatrix,
    k_range: &[usize],
    m: usize,
    starts: usize,
    seed: u64,
) -> Result<(KrzanowskiTrace, Vec<usize>)> {
    krzanowski_fits(data, k_range, m, starts, seed, KMeansOptions::default()).map(|(t, c, _)| (t, c))
}

pub fn krzanowski_fits(
    data: &DataMatrix,
    k_range: &[usize],
    m: usize,
    starts: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<(KrzanowskiTrace, Vec<usize>, Vec<KMeansResult>)> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if k_range.len() < m + 2 {
        return Err(invalid("k_range must cover at least m + 2 values"));
    }
    if k_range.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(invalid("k_range must be consecutive and ascending"));
    }
    for &k in k_range {
        validate_k(data, k)?;
    }
    let fits: Vec<Result<KMeansResult>> = par::map_range(k_range.len(), |i| {
        let k = k_range[i];
        best_of_with(data, k, starts, rng::derive(seed, rng::tag::KRZANOWSKI, k as u64), opts)
    });
    let fits: Vec<KMeansResult> = fits.into_iter().collect::<Result<_>>()?;
    let traces: Vec<f64> = fits.iter().map(|f| f.wgss).collect();
    let (trace, picks) = krzanowski_from_traces(k_range, &traces, data.p(), m);
    Ok((trace, picks, fits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pairs() -> DataMatrix {
        DataMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]).unwrap()
    }

    #[test]
    fn unit_square_k4_is_exact() {
        let d = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let r = lloyd(&d, 4, 3).unwrap();
        assert_eq!(r.wgss, 0.0);
        assert_eq!(r.partition.k(), 4);
        assert!(r.partition.sizes()[1..].iter().all(|&s| s == 1));
    }

    #[test]
    fn two_pairs_k2_hand_optimum() {
        let r = best_of(&two_pairs(), 2, 10, 5).unwrap();
        assert!((r.wgss - 1.0).abs() < 1e-12);
        let mut centers: Vec<Vec<f64>> = (0..2).map(|c| r.center(c).to_vec()).collect();
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(centers, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
    }

    #[test]
    fn k1_is_grand_mean() {
        let d = DataMatrix::from_rows(&[[1.0, 2.0], [3.0, 2.0], [5.0, 8.0]]).unwrap();
        let r = lloyd(&d, 1, 0).unwrap();
        assert_eq!(r.center(0), &[3.0, 4.0]);
        let total: f64 = d.rows().map(|x| sq_dist(x, &[3.0, 4.0])).sum();
        assert!((r.wgss - total).abs() < 1e-12);
    }

    #[test]
    fn k_beyond_distinct_rows_is_rejected() {
        let d = DataMatrix::from_rows(&[[1.0], [1.0], [2.0]]).unwrap();
        assert!(lloyd(&d, 3, 0).is_err());
        assert!(lloyd(&d, 2, 0).is_ok());
        assert!(best_of(&d, 2, 0, 0).is_err());
    }

    #[test]
    fn best_of_one_start_equals_lloyd() {
        let d = DataMatrix::from_rows(&[[0.0], [0.3], [1.0], [5.0], [5.2], [9.0], [9.1]]).unwrap();
        assert_eq!(best_of(&d, 3, 1, 42).unwrap(), lloyd(&d, 3, 42).unwrap());
    }

    #[test]
    fn krzanowski_worked_example() {
        let (t, picks) = krzanowski_from_traces(&[1, 2, 3, 4], &[100.0, 20.0, 18.0, 17.0], 2, 2);
        assert_eq!(t.diffs, vec![None, Some(60.0), Some(-14.0), Some(-14.0)]);
        assert!((t.ratios[1].unwrap() - 60.0 / 14.0).abs() < 1e-12);
        assert_eq!(t.ratios[2], Some(1.0));
        assert_eq!(t.ratios[3], None);
        assert_eq!(picks, vec![2, 3]);
    }

    #[test]
    fn krzanowski_exact_cancellation_has_no_candidates() {
        let ks: Vec<usize> = (1..=8).collect();
        let traces: Vec<f64> = ks.iter().map(|&k| 2520.0 / k as f64).collect();
        let (t, picks) = krzanowski_from_traces(&ks, &traces, 2, 3);
        assert!(t.diffs.iter().flatten().all(|&d| d == 0.0));
        assert!(picks.is_empty());
    }

    #[test]
    fn krzanowski_argument_checks() {
        let d = two_pairs();
        assert!(krzanowski_candidates(&d, &[1, 2], 1, 2, 0).is_err());
        assert!(krzanowski_candidates(&d, &[1, 2, 4], 1, 2, 0).is_err());
        assert!(krzanowski_candidates(&d, &[1, 2, 3], 0, 2, 0).is_err());
    }
}

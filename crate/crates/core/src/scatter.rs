//! Scatter removal: observations that K-means places in tiny groups are
//! dropped before clustering.

use alloc::vec::Vec;

use crate::data::DataMatrix;
use crate::error::{invalid, Result};
use crate::kmeans::{best_of_with, KMeansOptions};
use crate::math::{ceil, sqrt};

/// Default minimum group size as a fraction of `n`.
pub const DEFAULT_FRAC: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScatterResult {
    /// Retained observations, ascending.
    pub core_indices: Vec<usize>,
    /// Removed observations, ascending.
    pub scatter_indices: Vec<usize>,
    pub n_star: usize,
}

/// Default restart budget for the scatter run: `min(100, ⌈√(n p)⌉)`.
pub fn default_starts(n: usize, p: usize) -> usize {
    (ceil(sqrt((n * p) as f64)) as usize).clamp(1, 100)
}

/// Fits `best_of(data, g, starts)` and marks every member of a group with
/// fewer than `frac · n` observations as scatter.
pub fn remove_scatter(data: &DataMatrix, g: usize, frac: f64, starts: usize, seed: u64) -> Result<ScatterResult> {
    remove_scatter_with(data, g, frac, starts, seed, KMeansOptions::default())
}

pub fn remove_scatter_with(
    data: &DataMatrix,
    g: usize,
    frac: f64,
    starts: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<ScatterResult> {
    if g < 2 || g > data.n() {
        return Err(invalid(alloc::format!("G = {g} must lie in 2..={}", data.n())));
    }
    if !(0.0..1.0).contains(&frac) {
        return Err(invalid("scatter fraction must lie in [0, 1)"));
    }
    let fit = best_of_with(data, g, starts, seed, opts)?;
    let threshold = frac * data.n() as f64;
    let sizes = fit.partition.sizes();
    let (core_indices, scatter_indices): (Vec<usize>, Vec<usize>) =
        (0..data.n()).partition(|&i| (sizes[fit.partition.labels()[i] as usize] as f64) >= threshold);
    Ok(ScatterResult {
        n_star: core_indices.len(),
        core_indices,
        scatter_indices,
    })
}

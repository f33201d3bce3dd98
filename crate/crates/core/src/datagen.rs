//! Seeded generators for synthetic benchmark shapes with ground truth.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;
use crate::error::{invalid, Result};
use crate::math::{cos, sin, sq_dist, sqrt};
use crate::partition::{Partition, SCATTER};
use crate::rng::{self, Rng};

/// Shape name plus the numeric parameters a dataset was generated with.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub shape: String,
    pub params: Vec<(String, f64)>,
}

impl Descriptor {
    fn new(shape: &str, params: &[(&str, f64)]) -> Self {
        Self {
            shape: shape.into(),
            params: params.iter().map(|&(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub truth: Partition,
    pub descriptor: Descriptor,
}

fn stream(seed: u64) -> Rng {
    rng::substream(seed, rng::tag::DATAGEN, 0)
}

fn normal(g: &mut Rng) -> f64 {
    g.sample(StandardNormal)
}

fn finish(rows: Vec<f64>, p: usize, labels: Vec<u32>, descriptor: Descriptor) -> Result<LabeledDataset> {
    let n = labels.len();
    Ok(LabeledDataset {
        data: DataMatrix::new(rows, n, p)?,
        truth: Partition::new(labels)?,
        descriptor,
    })
}

/// A Gaussian disc inside a ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BullseyeParams {
    pub n_core: usize,
    pub n_ring: usize,
    /// Standard deviation of the central disc, per axis.
    pub core_sd: f64,
    pub ring_radius: f64,
    /// Radial jitter of the ring.
    pub noise_sd: f64,
}

impl Default for BullseyeParams {
    fn default() -> Self {
        Self {
            n_core: 200,
            n_ring: 200,
            core_sd: 0.5,
            ring_radius: 6.0,
            noise_sd: 1.2,
        }
    }
}

pub fn gen_bullseye(n_core: usize, n_ring: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    gen_bullseye_with(
        BullseyeParams {
            n_core,
            n_ring,
            noise_sd,
            ..BullseyeParams::default()
        },
        seed,
    )
}

pub fn gen_bullseye_with(prm: BullseyeParams, seed: u64) -> Result<LabeledDataset> {
    if prm.n_core < 10 || prm.n_ring < 10 {
        return Err(invalid("bullseye counts must be at least 10"));
    }
    if !(prm.noise_sd >= 0.0 && prm.core_sd > 0.0 && prm.ring_radius > 0.0) {
        return Err(invalid("bullseye scales must be positive"));
    }
    let mut g = stream(seed);
    let mut rows = Vec::with_capacity(2 * (prm.n_core + prm.n_ring));
    let mut labels = Vec::with_capacity(prm.n_core + prm.n_ring);
    for _ in 0..prm.n_core {
        rows.push(prm.core_sd * normal(&mut g));
        rows.push(prm.core_sd * normal(&mut g));
        labels.push(1);
    }
    for _ in 0..prm.n_ring {
        let theta = 2.0 * PI * g.random::<f64>();
        let r = prm.ring_radius + prm.noise_sd * normal(&mut g);
        rows.push(r * cos(theta));
        rows.push(r * sin(theta));
        labels.push(2);
    }
    let d = Descriptor::new(
        "bullseye",
        &[
            ("n_core", prm.n_core as f64),
            ("n_ring", prm.n_ring as f64),
            ("core_sd", prm.core_sd),
            ("ring_radius", prm.ring_radius),
            ("noise_sd", prm.noise_sd),
        ],
    );
    finish(rows, 2, labels, d)
}

/// Two interleaved half rings inside an enclosing ring, plus outliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BananaSpheresParams {
    /// Points per half ring.
    pub n_banana: usize,
    pub n_ring: usize,
    /// Outliers planted per group (3 groups).
    pub n_outliers: usize,
    pub banana_radius: f64,
    pub banana_noise: f64,
    pub ring_radius: f64,
    pub ring_noise: f64,
    /// Outliers are drawn uniformly from the data's bounding box scaled by
    /// this factor about its center.
    pub outlier_box: f64,
    /// Minimum distance from an outlier to every regular point.
    pub outlier_gap: f64,
    /// Label outliers 0 instead of with their group.
    pub outliers_as_scatter: bool,
}

impl Default for BananaSpheresParams {
    fn default() -> Self {
        Self {
            n_banana: 735,
            n_ring: 1500,
            n_outliers: 15,
            banana_radius: 3.0,
            banana_noise: 0.3,
            ring_radius: 8.0,
            ring_noise: 1.0,
            outlier_box: 1.5,
            outlier_gap: 3.0,
            outliers_as_scatter: false,
        }
    }
}

pub fn gen_banana_spheres(n_banana: usize, n_ring: usize, n_outliers: usize, seed: u64) -> Result<LabeledDataset> {
    gen_banana_spheres_with(
        BananaSpheresParams {
            n_banana,
            n_ring,
            n_outliers,
            ..BananaSpheresParams::default()
        },
        seed,
    )
}

pub fn gen_banana_spheres_with(prm: BananaSpheresParams, seed: u64) -> Result<LabeledDataset> {
    if prm.n_banana < 10 || prm.n_ring < 10 {
        return Err(invalid("banana-spheres counts must be at least 10"));
    }
    let r = prm.banana_radius;
    if !(r > 0.0 && prm.banana_noise >= 0.0 && prm.ring_noise >= 0.0 && prm.outlier_gap >= 0.0 && prm.outlier_box >= 1.0) {
        return Err(invalid("banana-spheres scales must be non-negative"));
    }
    // farthest reach of an arc from the origin, noise-free
    let reach = sqrt((1.5 * r) * (1.5 * r) + (0.25 * r) * (0.25 * r));
    if reach >= prm.ring_radius {
        return Err(invalid("half rings must lie inside the enclosing ring"));
    }
    let mut g = stream(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    // upper arc centered at (-r/2, -r/4), lower arc at (r/2, r/4)
    for (label, cx, cy, sign) in [(1u32, -0.5 * r, -0.25 * r, 1.0), (2, 0.5 * r, 0.25 * r, -1.0)] {
        for _ in 0..prm.n_banana {
            let theta = PI * g.random::<f64>();
            rows.push(cx + r * cos(theta) + prm.banana_noise * normal(&mut g));
            rows.push(cy + sign * r * sin(theta) + prm.banana_noise * normal(&mut g));
            labels.push(label);
        }
    }
    for _ in 0..prm.n_ring {
        let theta = 2.0 * PI * g.random::<f64>();
        let rad = prm.ring_radius + prm.ring_noise * normal(&mut g);
        rows.push(rad * cos(theta));
        rows.push(rad * sin(theta));
        labels.push(3);
    }

    if prm.n_outliers > 0 {
        let regular = rows.clone();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for pt in regular.chunks_exact(2) {
            for a in 0..2 {
                lo[a] = lo[a].min(pt[a]);
                hi[a] = hi[a].max(pt[a]);
            }
        }
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let half = [
            0.5 * prm.outlier_box * (hi[0] - lo[0]),
            0.5 * prm.outlier_box * (hi[1] - lo[1]),
        ];
        let gap2 = prm.outlier_gap * prm.outlier_gap;
        for label in 1..=3u32 {
            let mut placed = 0;
            let mut tries = 0usize;
            while placed < prm.n_outliers {
                tries += 1;
                if tries > 1_000_000 {
                    return Err(invalid("outlier gap too large for the bounding box"));
                }
                let cand = [
                    mid[0] + half[0] * (2.0 * g.random::<f64>() - 1.0),
                    mid[1] + half[1] * (2.0 * g.random::<f64>() - 1.0),
                ];
                if regular.chunks_exact(2).any(|pt| sq_dist(pt, &cand) < gap2) {
                    continue;
                }
                rows.extend_from_slice(&cand);
                labels.push(if prm.outliers_as_scatter { SCATTER } else { label });
                placed += 1;
            }
        }
    }
    let d = Descriptor::new(
        "banana-spheres",
        &[
            ("n_banana", prm.n_banana as f64),
            ("n_ring", prm.n_ring as f64),
            ("n_outliers", prm.n_outliers as f64),
            ("banana_radius", prm.banana_radius),
            ("banana_noise", prm.banana_noise),
            ("ring_radius", prm.ring_radius),
            ("ring_noise", prm.ring_noise),
            ("outlier_box", prm.outlier_box),
            ("outlier_gap", prm.outlier_gap),
        ],
    );
    finish(rows, 2, labels, d)
}

/// Isotropic Gaussians with standard deviation `sigma` at `centers`.
pub fn gen_gaussian_blobs(centers: &[Vec<f64>], sizes: &[usize], sigma: f64, seed: u64) -> Result<LabeledDataset> {
    let p = centers.first().map(Vec::len).ok_or_else(|| invalid("no centers given"))?;
    if p == 0 || centers.iter().any(|c| c.len() != p) {
        return Err(invalid("centers must share a positive dimension"));
    }
    if sizes.len() != centers.len() {
        return Err(invalid("one size per center required"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be finite and non-negative"));
    }
    let mut g = stream(seed);
    let n: usize = sizes.iter().sum();
    let mut rows = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for (c, (center, &size)) in centers.iter().zip(sizes).enumerate() {
        for _ in 0..size {
            rows.extend(center.iter().map(|&m| m + sigma * normal(&mut g)));
            labels.push(c as u32 + 1);
        }
    }
    let d = Descriptor::new("blobs", &[("k", centers.len() as f64), ("p", p as f64), ("sigma", sigma)]);
    finish(rows, p, labels, d)
}

/// Centers of `k ≤ p + 1` blobs at pairwise distance `separation`: the
/// scaled vertices of a regular simplex.
pub fn simplex_centers(k: usize, p: usize, separation: f64) -> Result<Vec<Vec<f64>>> {
    if k == 0 || k > p + 1 {
        return Err(invalid("simplex needs 1 <= k <= p + 1"));
    }
    // e_i / sqrt(2) in R^k are pairwise 1 apart; project onto the first k-1
    // coordinates of an orthonormal basis of the sum-zero hyperplane.
    let mut centers = alloc::vec![alloc::vec![0.0; p]; k];
    for (i, c) in centers.iter_mut().enumerate() {
        for (j, slot) in c.iter_mut().enumerate().take(k - 1) {
            // Helmert basis vector j: (1,..,1,-(j+1),0,..)/sqrt((j+1)(j+2))
            let norm = sqrt(((j + 1) * (j + 2)) as f64);
            let v = if i <= j {
                1.0
            } else if i == j + 1 {
                -((j + 1) as f64)
            } else {
                0.0
            };
            *slot = separation * v / norm / core::f64::consts::SQRT_2;
        }
    }
    Ok(centers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bullseye_shape() {
        let ds = gen_bullseye(100, 300, 1e-9, 1).unwrap();
        assert_eq!(ds.data.n(), 400);
        assert_eq!(ds.truth.k(), 2);
        let radii: Vec<f64> = (100..400).map(|i| sqrt(sq_dist(ds.data.row(i), &[0.0, 0.0]))).collect();
        let mean = radii.iter().sum::<f64>() / 300.0;
        let sd = sqrt(radii.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / 299.0);
        assert!(sd < 3e-9);
        assert!((mean - 6.0).abs() < 1e-8);
    }

    #[test]
    fn bullseye_centered() {
        let ds = gen_bullseye(100, 300, 0.5, 3).unwrap();
        let means = ds.data.column_means();
        let vars = ds.data.column_variances();
        for a in 0..2 {
            assert!(means[a].abs() < 4.0 * sqrt(vars[a] / 400.0));
        }
        assert!(gen_bullseye(5, 300, 0.5, 3).is_err());
    }

    #[test]
    fn banana_defaults_and_layout() {
        let ds = gen_banana_spheres_with(BananaSpheresParams::default(), 2).unwrap();
        assert_eq!(ds.data.n(), 3015);
        assert_eq!(ds.truth.k(), 3);
        let prm = BananaSpheresParams::default();
        let reach = sqrt(4.5 * 4.5 + 0.75 * 0.75);
        assert!(reach < prm.ring_radius);
        // outliers keep their distance
        for i in 3000..3015 {
            for j in 0..2970 {
                assert!(sq_dist(ds.data.row(i), ds.data.row(j)) >= 9.0);
            }
        }
        let sc = gen_banana_spheres_with(
            BananaSpheresParams {
                outliers_as_scatter: true,
                ..prm
            },
            2,
        )
        .unwrap();
        assert_eq!(sc.truth.scatter_count(), 45);
        assert_eq!(sc.data, ds.data);
    }

    #[test]
    fn blobs() {
        let one = gen_gaussian_blobs(&[vec![0.0, 0.0]], &[20], 1.0, 0).unwrap();
        assert_eq!(one.truth.k(), 1);
        let three = gen_gaussian_blobs(&[vec![0.0], vec![5.0], vec![9.0]], &[50, 60, 70], 1.0, 0).unwrap();
        assert_eq!(three.data.n(), 180);
        assert!(gen_gaussian_blobs(&[vec![0.0], vec![0.0, 1.0]], &[5, 5], 1.0, 0).is_err());

        let two = gen_gaussian_blobs(&[vec![0.0, 0.0], vec![10.0, 0.0]], &[5000, 5000], 1.0, 4).unwrap();
        let right = (0..10_000)
            .filter(|&i| {
                let nearer_second = two.data.row(i)[0] > 5.0;
                nearer_second == (two.truth.labels()[i] == 2)
            })
            .count();
        assert!(right as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn simplex_is_equilateral() {
        let c = simplex_centers(4, 5, 10.0).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((sqrt(sq_dist(&c[i], &c[j])) - 10.0).abs() < 1e-12);
            }
        }
        assert!(simplex_centers(4, 2, 1.0).is_err());
    }

    #[test]
    fn deterministic() {
        assert_eq!(gen_bullseye(40, 360, 0.5, 9).unwrap(), gen_bullseye(40, 360, 0.5, 9).unwrap());
        assert_ne!(gen_bullseye(40, 360, 0.5, 9).unwrap().data, gen_bullseye(40, 360, 0.5, 10).unwrap().data);
    }
}

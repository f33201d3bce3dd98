//! Probabilistic distance between spherical Gaussian entities.
//!
//! For an entity `l` with center `μ_l` and spherical variance `σ_l²`, the
//! variance-scaled squared distance of a point `x` is
//! `D_l(x) = ‖x − μ_l‖² / σ_l²`. For `X ~ N(μ_l, σ_l² I)` the statistic
//! `Y = D_j(X) − D_l(X)` is negative exactly when `X` looks closer to `j`
//! than to its own entity, so `p(l → j) = Pr[Y < 0]` is a misclassification
//! probability. With `λ = σ_l²/σ_j²`:
//!
//! * `λ = 1`: `Y ~ N(Δ², 4Δ²)` with `Δ = ‖μ_j − μ_l‖/σ_l`.
//! * `λ ≠ 1`: `Y ~ (λ − 1)·χ²_p(ν) − ‖μ_l − μ_j‖²/(σ_l² − σ_j²)` with
//!   noncentrality `ν = σ_l²‖μ_l − μ_j‖²/(σ_l² − σ_j²)²`.
//!
//! The entity distance is `1 − (p(a → b) + p(b → a))/2`. The general
//! quadratic-form representation (arbitrary eigenvalues `λ_i` and shifts
//! `δ_i`) is kept as a Monte-Carlo sampler that validates the closed forms.

use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::math::{sq_dist, sqrt};
use crate::matrix::SymMatrix;
use crate::special::{chisq_cdf, gamma_p, normal_cdf};
use crate::{par, rng};

/// Relative variance difference below which two entities use the
/// equal-variance branch.
pub const EQUAL_VARIANCE_TOL: f64 = 1e-6;

/// `df + ncp` above which the noncentral χ² CDF uses the normal approximation.
pub const SERIES_SWITCH: f64 = 2000.0;

/// Scale of the variance floor relative to the mean per-feature variance.
pub const VARIANCE_FLOOR_SCALE: f64 = 1e-8;

/// A K-means group summarized as a spherical Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCluster {
    pub mean: Vec<f64>,
    pub sigma2: f64,
    pub size: usize,
}

impl SphericalCluster {
    pub fn new(mean: Vec<f64>, sigma2: f64, size: usize) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(invalid("sigma2 must be finite and non-negative"));
        }
        if size == 0 {
            return Err(invalid("an entity needs at least one member"));
        }
        Ok(Self { mean, sigma2, size })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `‖x − μ‖² / σ²`.
pub fn mahalanobis_sq(x: &[f64], c: &SphericalCluster) -> Result<f64> {
    check_dims(x.len(), c.dim())?;
    if c.sigma2 <= 0.0 {
        return Err(Error::Domain("sigma2 is zero; floor the variance first".into()));
    }
    Ok(sq_dist(x, &c.mean) / c.sigma2)
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Noncentral χ² CDF. Uses the Poisson mixture of central χ² laws while
/// `df + ncp ≤ SERIES_SWITCH` and `N(df + ncp, 2(df + 2 ncp))` beyond.
pub fn noncentral_chisq_cdf(x: f64, df: usize, ncp: f64) -> Result<f64> {
    if df < 1 {
        return Err(invalid("degrees of freedom must be at least 1"));
    }
    if !(ncp >= 0.0) {
        return Err(invalid("noncentrality must be non-negative"));
    }
    if x.is_nan() {
        return Err(invalid("x is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if df as f64 + ncp <= SERIES_SWITCH {
        Ok(ncx2_cdf_series(x, df as f64, ncp))
    } else {
        Ok(ncx2_cdf_normal(x, df as f64, ncp))
    }
}

/// Poisson-mixture series `Σ_j Pois(j; ncp/2) · P(χ²_{df+2j} ≤ x)`, summed
/// outward from the Poisson mode.
pub fn ncx2_cdf_series(x: f64, df: f64, ncp: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let half = 0.5 * ncp;
    if half == 0.0 {
        return chisq_cdf(x, df);
    }
    let y = 0.5 * x;
    let mode = crate::math::floor(half);
    let w_mode = crate::math::exp(-half + mode * crate::math::ln(half) - crate::math::lgamma(mode + 1.0));
    const TAIL: f64 = 1e-17;

    let mut sum = 0.0;
    // downward, including the mode
    let mut w = w_mode;
    let mut j = mode;
    loop {
        sum += w * gamma_p(0.5 * df + j, y);
        if j == 0.0 || w < TAIL {
            break;
        }
        w *= j / half;
        j -= 1.0;
    }
    // upward
    let mut w = w_mode;
    let mut j = mode;
    loop {
        w *= half / (j + 1.0);
        j += 1.0;
        let p = gamma_p(0.5 * df + j, y);
        sum += w * p;
        // P(a, y) decreases in a, so the remaining mass is below w·p/(1 − ratio)
        if w * p < TAIL || (w < TAIL && j > half) {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Normal approximation `N(df + ncp, 2(df + 2 ncp))`.
pub fn ncx2_cdf_normal(x: f64, df: f64, ncp: f64) -> f64 {
    let mean = df + ncp;
    let sd = sqrt(2.0 * (df + 2.0 * ncp));
    normal_cdf((x - mean) / sd)
}

/// Probability that a point of `from` is closer (in variance-scaled squared
/// distance) to `into`'s center than to its own: `Pr[Y < 0]`.
pub fn misclass_prob(from: &SphericalCluster, into: &SphericalCluster) -> Result<f64> {
    check_dims(from.dim(), into.dim())?;
    let (s_l, s_j) = (from.sigma2, into.sigma2);
    if s_l <= 0.0 || s_j <= 0.0 {
        return Err(Error::Domain("sigma2 is zero; floor the variance first".into()));
    }
    let dist2 = sq_dist(&from.mean, &into.mean);
    if (s_l - s_j).abs() <= EQUAL_VARIANCE_TOL * s_l.max(s_j) {
        // Y ~ N(Δ², 4Δ²) ⇒ Pr[Y < 0] = Φ(−Δ/2)
        let delta = sqrt(dist2 / s_l);
        return Ok(normal_cdf(-0.5 * delta));
    }
    let diff = s_l - s_j;
    let scale = s_l / s_j - 1.0;
    let ncp = s_l * dist2 / (diff * diff);
    // Y = scale·W − dist2/diff < 0  ⇔  W < t when scale > 0, W > t otherwise,
    // with t = dist2·σ_j²/diff² ≥ 0.
    let t = dist2 * s_j / (diff * diff);
    let p = from.dim();
    let cdf = noncentral_chisq_cdf(t, p, ncp)?;
    Ok(if scale > 0.0 { cdf } else { 1.0 - cdf })
}

/// `1 − (p(a → b) + p(b → a)) / 2`, symmetric by construction.
pub fn cluster_distance(a: &SphericalCluster, b: &SphericalCluster) -> Result<f64> {
    let ab = misclass_prob(a, b)?;
    let ba = misclass_prob(b, a)?;
    // sum in a fixed order so d(a, b) and d(b, a) agree bit for bit
    let (lo, hi) = if ab <= ba { (ab, ba) } else { (ba, ab) };
    Ok(1.0 - (lo + hi) / 2.0)
}

/// Pairwise entity distances with a zero diagonal.
pub fn entity_distance_matrix(entities: &[SphericalCluster]) -> Result<SymMatrix> {
    let k = entities.len();
    if k < 2 {
        return Err(invalid("need at least 2 entities"));
    }
    let rows: Vec<Result<Vec<f64>>> = par::map_range(k, |i| {
        ((i + 1)..k)
            .map(|j| cluster_distance(&entities[i], &entities[j]))
            .collect()
    });
    let mut m = SymMatrix::zeros(k);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, d) in row?.into_iter().enumerate() {
            m.set(i, i + 1 + off, d);
        }
    }
    Ok(m)
}

/// Variance floor for `data`: `VARIANCE_FLOOR_SCALE · trace(cov)/p`, and at
/// least the smallest positive normal float.
pub fn variance_floor(data: &DataMatrix) -> f64 {
    (VARIANCE_FLOOR_SCALE * data.total_variance() / data.p() as f64).max(f64::MIN_POSITIVE)
}

/// Fits a spherical entity to `members`: sample mean and
/// `σ² = trace(cov)/p` (divisor `n − 1`), floored at [`variance_floor`].
pub fn fit_entity(data: &DataMatrix, members: &[usize]) -> Result<SphericalCluster> {
    fit_entity_with_floor(data, members, variance_floor(data))
}

pub fn fit_entity_with_floor(data: &DataMatrix, members: &[usize], floor: f64) -> Result<SphericalCluster> {
    if members.is_empty() {
        return Err(invalid("cannot fit an entity with no members"));
    }
    let p = data.p();
    let mut mean = alloc::vec![0.0; p];
    for &i in members {
        if i >= data.n() {
            return Err(invalid(alloc::format!("member index {i} out of range")));
        }
        for (m, v) in mean.iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    let size = members.len();
    mean.iter_mut().for_each(|m| *m /= size as f64);
    let sigma2 = if size > 1 {
        let ss: f64 = members.iter().map(|&i| sq_dist(data.row(i), &mean)).sum();
        ss / ((size - 1) as f64 * p as f64)
    } else {
        0.0
    };
    SphericalCluster::new(mean, sigma2.max(floor), size)
}

/// Quadratic form `Σ_i [(λ_i − 1) Z_i² + 2 λ_i δ_i Z_i + λ_i δ_i²]` in
/// independent standard normals, described by its eigenvalues and shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadFormSpec {
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl QuadFormSpec {
    pub fn new(lambdas: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        check_dims(lambdas.len(), deltas.len())?;
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(invalid("eigenvalues must be positive and finite"));
        }
        Ok(Self { lambdas, deltas })
    }

    /// Form of `D_j(X) − D_l(X)` for `X ~ N(μ_l, σ_l² I)` with `l = from`,
    /// `j = into`: every `λ_i = σ_l²/σ_j²` and `δ = (μ_l − μ_j)/σ_l`.
    pub fn from_spherical(from: &SphericalCluster, into: &SphericalCluster) -> Result<Self> {
        check_dims(from.dim(), into.dim())?;
        let lambda = from.sigma2 / into.sigma2;
        let sd = sqrt(from.sigma2);
        let deltas = from.mean.iter().zip(&into.mean).map(|(l, j)| (l - j) / sd).collect();
        Self::new(alloc::vec![lambda; from.dim()], deltas)
    }
}

const UNIT_LAMBDA_TOL: f64 = 1e-12;

/// Monte-Carlo estimate of `Pr[Y < x] + ½ Pr[Y = x]` for the quadratic form.
///
/// Components with `λ_i ≠ 1` are drawn as `(λ_i − 1) U_i − λ_i δ_i²/(λ_i − 1)`
/// with `U_i` a noncentral χ²₁ of noncentrality `λ_i² δ_i²/(λ_i − 1)²`; those
/// with `λ_i = 1` as `δ_i (2 Z_i + δ_i)`. Ties with `x` count one half so a
/// degenerate form returns ½ at its atom.
pub fn quad_form_mc_cdf(spec: &QuadFormSpec, x: f64, draws: usize, seed: u64) -> Result<f64> {
    if draws < 10_000 {
        return Err(invalid("at least 10^4 draws are required"));
    }
    struct Term {
        scale: f64,
        root_ncp: f64,
        shift: f64,
        unit: bool,
        delta: f64,
    }
    let terms: Vec<Term> = spec
        .lambdas
        .iter()
        .zip(&spec.deltas)
        .map(|(&l, &d)| {
            if (l - 1.0).abs() <= UNIT_LAMBDA_TOL {
                Term { scale: 0.0, root_ncp: 0.0, shift: 0.0, unit: true, delta: d }
            } else {
                Term {
                    scale: l - 1.0,
                    root_ncp: l * d / (l - 1.0),
                    shift: -l * d * d / (l - 1.0),
                    unit: false,
                    delta: d,
                }
            }
        })
        .collect();
    const CHUNK: usize = 65_536;
    let chunks = draws.div_ceil(CHUNK);
    let counts = par::map_range(chunks, |c| {
        let mut rng = rng::substream(seed, rng::tag::MONTE_CARLO, c as u64);
        let len = CHUNK.min(draws - c * CHUNK);
        let mut twice = 0u64;
        for _ in 0..len {
            let mut y = 0.0;
            for t in &terms {
                let z: f64 = rng.sample(StandardNormal);
                if t.unit {
                    y += t.delta * (2.0 * z + t.delta);
                } else {
                    let u = (z + t.root_ncp) * (z + t.root_ncp);
                    y += t.scale * u + t.shift;
                }
            }
            twice += if y < x {
                2
            } else if y == x {
                1
            } else {
                0
            };
        }
        twice
    });
    Ok(counts.iter().sum::<u64>() as f64 / (2.0 * draws as f64))
}

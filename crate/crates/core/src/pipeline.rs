//! End-to-end K-mH: scatter removal, Krzanowski candidate entity counts,
//! entity merging, consensus estimate of the cluster count and the final
//! mean-ARI choice.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::consensus::{
    build_similarity_on, estimate_kstar, select_best_partition, subsample_indices, ConsensusOptions, KStarEstimate,
    LinkageCutoffs, Selection, SimilarityMatrix, DEFAULT_REPLICATES, DEFAULT_SUBSAMPLE, DEFAULT_THRESHOLD,
};
use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::gaussdist::{entity_distance_matrix, fit_entity_with_floor, variance_floor};
use crate::hierarchy::{change_points, cut_to_partition, single_linkage, ChangePointReport, CpMapping, MergeTrace};
use crate::kmeans::{best_of, krzanowski_fits, KMeansResult, KrzanowskiTrace};
use crate::math::{floor, sqrt};
use crate::partition::{Partition, SCATTER};
use crate::rng;
use crate::scatter::{default_starts, remove_scatter, ScatterResult, DEFAULT_FRAC};

/// Default K-means restarts per entity count.
pub const DEFAULT_STARTS: usize = 10;
/// Default change-point candidates per entity count.
pub const DEFAULT_L: usize = 3;

/// User-facing configuration; `None` fields take data-dependent defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct KmhConfig {
    /// Number of candidate entity counts `K₀`.
    pub m: Option<usize>,
    /// Change-point candidates per `K₀`.
    pub l: usize,
    /// Consensus replicates.
    pub b: usize,
    /// Scatter-run cluster count and cap on `K₀`.
    pub g: Option<usize>,
    pub kstar_known: Option<usize>,
    pub seed: u64,
    pub standardize: bool,
    pub scatter_frac: f64,
    pub scatter_starts: Option<usize>,
    pub starts: usize,
    pub subsample: Option<usize>,
    pub threshold: f64,
    pub cutoffs: LinkageCutoffs,
    pub cp_mapping: CpMapping,
    /// Inclusive range of `K` searched by the Krzanowski criterion;
    /// defaults to `2..=G`.
    pub k_range: Option<(usize, usize)>,
}

impl Default for KmhConfig {
    fn default() -> Self {
        Self {
            m: None,
            l: DEFAULT_L,
            b: DEFAULT_REPLICATES,
            g: None,
            kstar_known: None,
            seed: 0,
            standardize: false,
            scatter_frac: DEFAULT_FRAC,
            scatter_starts: None,
            starts: DEFAULT_STARTS,
            subsample: None,
            threshold: DEFAULT_THRESHOLD,
            cutoffs: LinkageCutoffs::default(),
            cp_mapping: CpMapping::default(),
            k_range: None,
        }
    }
}

/// Every parameter of a run with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub m: usize,
    pub l: usize,
    pub b: usize,
    pub g: usize,
    pub kstar_known: Option<usize>,
    pub seed: u64,
    pub standardize: bool,
    pub scatter_frac: f64,
    pub scatter_starts: usize,
    pub starts: usize,
    /// Requested cap on the consensus subsample (applied as `min(n*, ·)`).
    pub subsample: usize,
    pub threshold: f64,
    pub cutoffs: LinkageCutoffs,
    pub cp_mapping: CpMapping,
    pub k_range: (usize, usize),
}

/// `min(10, ⌊√(np)/10⌋)`, at least 1.
pub fn default_m(n: usize, p: usize) -> usize {
    (floor(sqrt((n * p) as f64) / 10.0) as usize).clamp(1, 10)
}

/// `⌊√n⌋`, kept within `2..=n`.
pub fn default_g(n: usize) -> usize {
    (floor(sqrt(n as f64)) as usize).clamp(2, n.max(2))
}

impl KmhConfig {
    /// Fills defaults for an `n × p` dataset and checks consistency.
    pub fn resolve(&self, n: usize, p: usize) -> Result<ResolvedConfig> {
        let m = self.m.unwrap_or_else(|| default_m(n, p));
        let g = self.g.unwrap_or_else(|| default_g(n));
        if m == 0 {
            return Err(invalid("M must be at least 1"));
        }
        if self.l == 0 {
            return Err(invalid("L must be at least 1"));
        }
        if self.b == 0 {
            return Err(invalid("B must be at least 1"));
        }
        if g < 2 || g > n {
            return Err(invalid(format!("G = {g} must lie in 2..={n}")));
        }
        if let Some(k) = self.kstar_known {
            if k < 2 {
                return Err(invalid(format!("known K* = {k} must be at least 2")));
            }
            if k > g {
                return Err(invalid(format!("known K* = {k} exceeds G = {g}")));
            }
        }
        if !(0.0..1.0).contains(&self.scatter_frac) {
            return Err(invalid("scatter fraction must lie in [0, 1)"));
        }
        if self.starts == 0 || self.scatter_starts == Some(0) {
            return Err(invalid("start counts must be at least 1"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(invalid("threshold must lie in (0, 1)"));
        }
        if self.subsample.is_some_and(|s| s < 2) {
            return Err(invalid("subsample must be at least 2"));
        }
        let k_range = self.k_range.unwrap_or((2, g));
        if k_range.0 < 1 || k_range.1 > n || k_range.1 < k_range.0 + 2 {
            return Err(invalid(format!(
                "K search range {}..={} must lie within 1..={n} and span at least 3 values",
                k_range.0, k_range.1
            )));
        }
        if !(self.cutoffs.mean_cut.is_finite() && !self.cutoffs.cv_cut.is_nan()) {
            return Err(invalid("linkage cutoffs must be numbers"));
        }
        Ok(ResolvedConfig {
            m,
            l: self.l,
            b: self.b,
            g,
            kstar_known: self.kstar_known,
            seed: self.seed,
            standardize: self.standardize,
            scatter_frac: self.scatter_frac,
            scatter_starts: self.scatter_starts.unwrap_or_else(|| default_starts(n, p)),
            starts: self.starts,
            subsample: self.subsample.unwrap_or(DEFAULT_SUBSAMPLE),
            threshold: self.threshold,
            cutoffs: self.cutoffs,
            cp_mapping: self.cp_mapping,
            k_range,
        })
    }
}

/// Centers every column and scales it to unit variance (divisor `n − 1`).
/// Constant columns are centered only; their indices are returned.
pub fn standardize(data: &DataMatrix) -> (DataMatrix, Vec<usize>) {
    let means = data.column_means();
    let sds: Vec<f64> = data.column_variances().into_iter().map(sqrt).collect();
    let constant: Vec<usize> = (0..data.p()).filter(|&j| !(sds[j] > 0.0)).collect();
    let values: Vec<f64> = data
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let j = idx % data.p();
            if sds[j] > 0.0 {
                (v - means[j]) / sds[j]
            } else {
                v - means[j]
            }
        })
        .collect();
    let out = DataMatrix::new(values, data.n(), data.p()).expect("same shape, finite values");
    (out, constant)
}

/// Work done for one candidate entity count.
#[derive(Debug, Clone, PartialEq)]
pub struct K0Run {
    pub k0: usize,
    /// Krzanowski ratio, absent for padded candidates.
    pub c_k: Option<f64>,
    pub wgss: f64,
    pub merge_trace: MergeTrace,
    pub change_points: ChangePointReport,
    /// Cluster counts cut from this run in the candidate stage.
    pub kstars: Vec<usize>,
}

/// A candidate partition of the retained observations with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub k0: usize,
    pub kstar: usize,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmhReport {
    pub config: ResolvedConfig,
    pub warnings: Vec<String>,
    /// Columns left unscaled by standardization.
    pub constant_columns: Vec<usize>,
    pub scatter: ScatterResult,
    pub krzanowski: Option<KrzanowskiTrace>,
    /// Entity counts tried, in order; those past the Krzanowski picks pad
    /// the list.
    pub k0_candidates: Vec<usize>,
    pub runs: Vec<K0Run>,
    /// Partitions feeding the co-association matrix (`M·L` when `K*` is
    /// estimated, `M` when known), over the retained observations.
    pub stage1: Vec<Candidate>,
    pub kstar_estimate: Option<KStarEstimate>,
    pub kstar: usize,
    /// Partitions compared for the final choice.
    pub candidates: Vec<Candidate>,
    pub selection: Selection,
    pub chosen_index: usize,
    /// Final labels over all `n` observations; scatter is `0`.
    pub final_partition: Partition,
    /// `ψ` of the candidate-stage partitions on a subsample.
    pub similarity: SimilarityMatrix,
    /// Original row index of each similarity row.
    pub similarity_rows: Vec<usize>,
}

/// Runs the full procedure.
pub fn run_kmh(data: &DataMatrix, config: &KmhConfig) -> Result<KmhReport> {
    let cfg = config.resolve(data.n(), data.p())?;
    let mut warnings = Vec::new();

    let (work, constant_columns) = if cfg.standardize {
        let (d, c) = standardize(data);
        for &j in &c {
            warnings.push(format!("column {j} is constant and was not scaled"));
        }
        (d, c)
    } else {
        (data.clone(), Vec::new())
    };

    let scatter = remove_scatter(
        &work,
        cfg.g,
        cfg.scatter_frac,
        cfg.scatter_starts,
        rng::derive(cfg.seed, rng::tag::SCATTER, 0),
    )?;
    let n_star = scatter.n_star;
    if n_star < 2 {
        return Err(Error::Pipeline(format!("only {n_star} observations remain after scatter removal")));
    }
    let core = work.select_rows(&scatter.core_indices)?;
    let k_cap = cfg.g.min(core.distinct_rows());
    if k_cap < 2 {
        return Err(Error::Pipeline("fewer than 2 distinct observations remain".into()));
    }

    let (k_lo, k_hi) = cfg.k_range;
    let k_range: Vec<usize> = (k_lo..=k_hi.min(core.distinct_rows())).collect();
    let (krzanowski, mut k0_candidates, fits) = if k_range.len() >= 3 {
        let m_eff = cfg.m.min(k_range.len() - 2);
        let (t, picks, fits) = krzanowski_fits(&core, &k_range, m_eff, cfg.starts, cfg.seed, Default::default())?;
        (Some(t), picks, fits)
    } else {
        (None, Vec::new(), Vec::new())
    };
    let picked = k0_candidates.len();
    let mut k = k_cap;
    while k0_candidates.len() < cfg.m && k >= 2 {
        if !k0_candidates.contains(&k) {
            k0_candidates.push(k);
        }
        k -= 1;
    }
    if picked < k0_candidates.len() {
        warnings.push(format!(
            "only {picked} Krzanowski candidates available; padded with {:?}",
            &k0_candidates[picked..]
        ));
    }
    if k0_candidates.len() < cfg.m {
        warnings.push(format!("only {} candidate entity counts are possible", k0_candidates.len()));
    }

    let k0_list: Vec<usize> = match cfg.kstar_known {
        Some(ks) => {
            let (keep, skip): (Vec<usize>, Vec<usize>) = k0_candidates.iter().partition(|&&k0| k0 >= ks);
            for k0 in skip {
                warnings.push(format!("K0 = {k0} is below the known K* = {ks}; skipped"));
            }
            keep
        }
        None => k0_candidates.clone(),
    };
    if k0_list.is_empty() {
        return Err(Error::Pipeline("every candidate entity count was skipped".into()));
    }

    let floor = variance_floor(&core);
    let runs: Vec<Result<(K0Run, KMeansResult)>> = crate::par::map_range(k0_list.len(), |i| {
        let k0 = k0_list[i];
        let fit = match k_range.iter().position(|&k| k == k0).and_then(|pos| fits.get(pos)) {
            Some(f) => f.clone(),
            None => best_of(&core, k0, cfg.starts, rng::derive(cfg.seed, rng::tag::KRZANOWSKI, k0 as u64))?,
        };
        let entities = fit
            .partition
            .members()
            .iter()
            .map(|m| fit_entity_with_floor(&core, m, floor))
            .collect::<Result<Vec<_>>>()?;
        let dist = entity_distance_matrix(&entities)?;
        let (merge_trace, _) = single_linkage(&dist, 1)?;
        let cp = change_points(&merge_trace, cfg.l.min(k0 - 1), cfg.cp_mapping)?;
        let kstars = match cfg.kstar_known {
            Some(ks) => alloc::vec![ks],
            None => cp.candidate_kstars.clone(),
        };
        let c_k = krzanowski
            .as_ref()
            .and_then(|t| t.k_values.iter().position(|&k| k == k0).and_then(|pos| t.ratios[pos]));
        let run = K0Run {
            k0,
            c_k,
            wgss: fit.wgss,
            merge_trace,
            change_points: cp,
            kstars,
        };
        Ok((run, fit))
    });
    let runs: Vec<(K0Run, KMeansResult)> = runs.into_iter().collect::<Result<_>>()?;

    let mut stage1 = Vec::new();
    for (run, fit) in &runs {
        for &ks in &run.kstars {
            stage1.push(Candidate {
                k0: run.k0,
                kstar: ks,
                partition: cut_to_partition(&run.merge_trace, ks, &fit.partition)?,
            });
        }
    }
    let stage1_parts: Vec<Partition> = stage1.iter().map(|c| c.partition.clone()).collect();
    let sub = cfg.subsample.min(n_star);
    let opts = ConsensusOptions {
        threshold: cfg.threshold,
        cutoffs: cfg.cutoffs,
    };

    let (kstar, kstar_estimate, candidates) = match cfg.kstar_known {
        Some(ks) => (ks, None, stage1.clone()),
        None => {
            let est = estimate_kstar(&stage1_parts, cfg.b, sub, cfg.seed, opts)?;
            let ks = est.median_kstar;
            let mut cands = Vec::new();
            for (run, fit) in &runs {
                if ks > run.k0 {
                    warnings.push(format!("K0 = {} is below the estimated K* = {ks}; skipped", run.k0));
                    continue;
                }
                if ks < 2 {
                    break;
                }
                cands.push(Candidate {
                    k0: run.k0,
                    kstar: ks,
                    partition: cut_to_partition(&run.merge_trace, ks, &fit.partition)?,
                });
            }
            if ks < 2 {
                warnings.push(format!("estimated K* = {ks}; using 2 groups"));
                for (run, fit) in &runs {
                    cands.push(Candidate {
                        k0: run.k0,
                        kstar: 2,
                        partition: cut_to_partition(&run.merge_trace, 2, &fit.partition)?,
                    });
                }
            }
            if cands.is_empty() {
                return Err(Error::Pipeline(format!("no entity count reaches the estimated K* = {ks}")));
            }
            (ks.max(2), Some(est), cands)
        }
    };

    let selection = if candidates.len() == 1 {
        Selection {
            index: 0,
            ari: alloc::vec![1.0],
            mean_ari: alloc::vec![1.0],
        }
    } else {
        let parts: Vec<Partition> = candidates.iter().map(|c| c.partition.clone()).collect();
        select_best_partition(&parts)?
    };
    let chosen_index = selection.index;

    let mut labels = alloc::vec![SCATTER; data.n()];
    for (pos, &row) in scatter.core_indices.iter().enumerate() {
        labels[row] = candidates[chosen_index].partition.labels()[pos];
    }
    let final_partition = Partition::new(labels)?;

    let shown = subsample_indices(n_star, sub, rng::derive(cfg.seed, rng::tag::CONSENSUS, u64::MAX), 0);
    let similarity = build_similarity_on(&stage1_parts, &shown)?;
    let similarity_rows = shown.iter().map(|&i| scatter.core_indices[i]).collect();

    Ok(KmhReport {
        config: cfg,
        warnings,
        constant_columns,
        scatter,
        krzanowski,
        k0_candidates,
        runs: runs.into_iter().map(|(r, _)| r).collect(),
        stage1,
        kstar_estimate,
        kstar,
        candidates,
        selection,
        chosen_index,
        final_partition,
        similarity,
        similarity_rows,
    })
}

//! JSON documents written next to the labels.

use kmh_core::hierarchy::CpMapping;
use kmh_core::pipeline::{KmhReport, ResolvedConfig};
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct ConfigOut {
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
    pub subsample: usize,
    pub threshold: f64,
    pub linkage_mean_cut: f64,
    pub linkage_cv_cut: f64,
    pub cp_mapping: &'static str,
    pub k_range: [usize; 2],
}

impl From<&ResolvedConfig> for ConfigOut {
    fn from(c: &ResolvedConfig) -> Self {
        Self {
            m: c.m,
            l: c.l,
            b: c.b,
            g: c.g,
            kstar_known: c.kstar_known,
            seed: c.seed,
            standardize: c.standardize,
            scatter_frac: c.scatter_frac,
            scatter_starts: c.scatter_starts,
            starts: c.starts,
            subsample: c.subsample,
            threshold: c.threshold,
            linkage_mean_cut: c.cutoffs.mean_cut,
            linkage_cv_cut: c.cutoffs.cv_cut,
            cp_mapping: match c.cp_mapping {
                CpMapping::BeforeJump => "before-jump",
                CpMapping::Shifted => "shifted",
            },
            k_range: [c.k_range.0, c.k_range.1],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Krzanowski {
    pub k: Vec<usize>,
    pub trace: Vec<f64>,
    pub diff: Vec<Option<f64>>,
    pub c_k: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct K0Out {
    pub k0: usize,
    pub c_k: Option<f64>,
    pub wgss: f64,
    pub merge_heights: Vec<f64>,
    pub change_points: Vec<f64>,
    pub kstar_candidates: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct PartitionRef {
    pub k0: usize,
    pub kstar: usize,
}

#[derive(Debug, Serialize)]
pub struct Frequency {
    pub kstar: usize,
    pub fraction: f64,
}

#[derive(Debug, Serialize)]
pub struct KStarOut {
    pub known: bool,
    pub value: usize,
    pub per_replicate: Vec<usize>,
    pub median: Option<usize>,
    pub frequencies: Vec<Frequency>,
}

#[derive(Debug, Serialize)]
pub struct CandidateOut {
    pub k0: usize,
    pub kstar: usize,
    pub mean_ari: f64,
}

#[derive(Debug, Serialize)]
pub struct FinalOut {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub scatter: usize,
}

#[derive(Debug, Serialize)]
pub struct TruthOut {
    pub ari: f64,
    pub ari_excluding_scatter: Option<f64>,
    pub k: usize,
}

#[derive(Debug, Serialize)]
pub struct ReportOut {
    pub schema: &'static str,
    pub version: u32,
    pub n: usize,
    pub p: usize,
    pub n_star: usize,
    pub scatter_indices: Vec<usize>,
    pub config: ConfigOut,
    pub warnings: Vec<String>,
    pub krzanowski: Option<Krzanowski>,
    pub k0_candidates: Vec<K0Out>,
    pub stage1: Vec<PartitionRef>,
    pub kstar: KStarOut,
    pub candidates: Vec<CandidateOut>,
    pub ari_matrix: Vec<Vec<f64>>,
    pub chosen_index: usize,
    #[serde(rename = "final")]
    pub final_partition: FinalOut,
    pub truth: Option<TruthOut>,
}

impl ReportOut {
    pub fn new(rep: &KmhReport, p: usize, truth: Option<TruthOut>) -> Self {
        let n_cand = rep.candidates.len();
        let kstar = match &rep.kstar_estimate {
            Some(est) => KStarOut {
                known: false,
                value: rep.kstar,
                per_replicate: est.per_replicate.clone(),
                median: Some(est.median_kstar),
                frequencies: est
                    .frequencies
                    .iter()
                    .map(|&(kstar, fraction)| Frequency { kstar, fraction })
                    .collect(),
            },
            None => KStarOut {
                known: true,
                value: rep.kstar,
                per_replicate: Vec::new(),
                median: None,
                frequencies: Vec::new(),
            },
        };
        let sizes = rep.final_partition.sizes();
        Self {
            schema: "kmh-report",
            version: REPORT_VERSION,
            n: rep.final_partition.len(),
            p,
            n_star: rep.scatter.n_star,
            scatter_indices: rep.scatter.scatter_indices.clone(),
            config: (&rep.config).into(),
            warnings: rep.warnings.clone(),
            krzanowski: rep.krzanowski.as_ref().map(|t| Krzanowski {
                k: t.k_values.clone(),
                trace: t.traces.clone(),
                diff: t.diffs.clone(),
                c_k: t.ratios.clone(),
            }),
            k0_candidates: rep
                .runs
                .iter()
                .map(|r| K0Out {
                    k0: r.k0,
                    c_k: r.c_k,
                    wgss: r.wgss,
                    merge_heights: r.merge_trace.heights(),
                    change_points: r.change_points.cps.clone(),
                    kstar_candidates: r.change_points.candidate_kstars.clone(),
                })
                .collect(),
            stage1: rep
                .stage1
                .iter()
                .map(|c| PartitionRef {
                    k0: c.k0,
                    kstar: c.kstar,
                })
                .collect(),
            kstar,
            candidates: rep
                .candidates
                .iter()
                .zip(&rep.selection.mean_ari)
                .map(|(c, &w)| CandidateOut {
                    k0: c.k0,
                    kstar: c.kstar,
                    mean_ari: w,
                })
                .collect(),
            ari_matrix: rep.selection.ari.chunks(n_cand).map(<[f64]>::to_vec).collect(),
            chosen_index: rep.chosen_index,
            final_partition: FinalOut {
                k: rep.final_partition.k(),
                sizes: sizes[1..].to_vec(),
                scatter: sizes[0],
            },
            truth,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
    pub report_version: u32,
}

#[derive(Debug, Serialize)]
pub struct Substream {
    pub phase: &'static str,
    pub tag: String,
}

#[derive(Debug, Serialize)]
pub struct Outputs {
    pub labels: String,
    pub report: String,
    pub similarity: String,
    pub heatmap: String,
    pub heatmap_order: String,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub read_ms: f64,
    pub cluster_ms: f64,
    pub write_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub version: u32,
    pub tool: Tool,
    pub input: String,
    pub n: usize,
    pub p: usize,
    pub truth_col: Option<usize>,
    pub seed: u64,
    pub substreams: Vec<Substream>,
    pub threads: usize,
    pub config: ConfigOut,
    pub outputs: Outputs,
    pub timings: Timings,
}

pub fn substreams() -> Vec<Substream> {
    use kmh_core::rng::tag;
    [
        ("scatter", tag::SCATTER),
        ("krzanowski", tag::KRZANOWSKI),
        ("restart", tag::RESTART),
        ("consensus", tag::CONSENSUS),
    ]
    .into_iter()
    .map(|(phase, t)| Substream {
        phase,
        tag: format!("{t:#06x}"),
    })
    .collect()
}

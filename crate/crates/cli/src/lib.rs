//! Command-line front end: `kmh run` clusters a CSV, `kmh gen` writes a
//! synthetic dataset.

pub mod args;
pub mod heatmap;
pub mod io;
pub mod report;

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use kmh_core::consensus::{dendrogram_order, LinkageCutoffs};
use kmh_core::datagen::{self, BananaSpheresParams, BullseyeParams, LabeledDataset};
use kmh_core::hierarchy::CpMapping;
use kmh_core::pipeline::{run_kmh, KmhConfig};
use kmh_core::{adjusted_rand_index, partition::ari_with, ScatterMode};

use args::{Cli, Command, GenArgs, Mapping, RunArgs, Shape};
use report::{Manifest, Outputs, ReportOut, Timings, Tool, TruthOut};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable input or contradictory settings.
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => exit::USAGE,
            Self::Internal(_) => exit::INTERNAL,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Self::Usage(e) | Self::Internal(e) => e,
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

/// Runs a parsed command line and returns the exit code, reporting errors
/// on stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.threads {
        Some(0) => Err(usage(anyhow::anyhow!("--threads must be at least 1"))),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, t)),
            Err(e) => Err(internal(e)),
        },
        None => dispatch(&cli.command, rayon::current_num_threads()),
    };
    match result {
        Ok(()) => exit::OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            f.code()
        }
    }
}

fn dispatch(cmd: &Command, threads: usize) -> Result<(), Failure> {
    match cmd {
        Command::Run(a) => cmd_run(a, threads),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn config_from(a: &RunArgs) -> KmhConfig {
    KmhConfig {
        m: a.m,
        l: a.l,
        b: a.b,
        g: a.g,
        kstar_known: a.kstar,
        seed: a.seed,
        standardize: a.standardize,
        scatter_frac: a.scatter_frac,
        scatter_starts: a.scatter_starts,
        starts: a.starts,
        subsample: Some(a.subsample),
        threshold: a.threshold,
        cutoffs: LinkageCutoffs {
            mean_cut: a.linkage_cutoffs.0,
            cv_cut: a.linkage_cutoffs.1,
        },
        cp_mapping: match a.cp_mapping {
            Mapping::BeforeJump => CpMapping::BeforeJump,
            Mapping::Shifted => CpMapping::Shifted,
        },
        k_range: a.k_range,
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn cmd_run(a: &RunArgs, threads: usize) -> Result<(), Failure> {
    let t_read = Instant::now();
    let ds = io::read_dataset(&a.input, a.truth_col).map_err(usage)?;
    let (n, p) = (ds.data.n(), ds.data.p());
    let config = config_from(a);
    let resolved = config.resolve(n, p).map_err(usage)?;
    let read_ms = ms(t_read);

    let t_cluster = Instant::now();
    let rep = run_kmh(&ds.data, &config).map_err(internal)?;
    let cluster_ms = ms(t_cluster);
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }

    let t_write = Instant::now();
    let truth = match &ds.truth {
        Some(t) => Some(TruthOut {
            ari: adjusted_rand_index(t, &rep.final_partition).map_err(internal)?,
            ari_excluding_scatter: ari_with(t, &rep.final_partition, ScatterMode::Exclude).ok(),
            k: t.k(),
        }),
        None => None,
    };
    let report = ReportOut::new(&rep, p, truth);

    let mut labels = String::from("index,label\n");
    for (i, l) in rep.final_partition.labels().iter().enumerate() {
        labels.push_str(&format!("{i},{l}\n"));
    }
    let order = dendrogram_order(&rep.similarity);

    let mut staged = io::Staged::new(&a.output_dir).map_err(internal)?;
    let files = [
        ("labels.csv", labels.into_bytes()),
        ("report.json", json(&report)?),
        ("similarity.csv", heatmap::similarity_csv(&rep.similarity, &rep.similarity_rows).into_bytes()),
        ("heatmap.pgm", heatmap::pgm(&rep.similarity, &order).into_bytes()),
        ("heatmap_order.csv", heatmap::order_csv(&order, &rep.similarity_rows).into_bytes()),
    ];
    for (name, bytes) in &files {
        staged.add(name, bytes).map_err(internal)?;
    }
    let manifest = Manifest {
        schema: "kmh-manifest",
        version: report::MANIFEST_VERSION,
        tool: Tool {
            name: "kmh",
            version: env!("CARGO_PKG_VERSION"),
            report_version: report::REPORT_VERSION,
        },
        input: a.input.display().to_string(),
        n,
        p,
        truth_col: a.truth_col,
        seed: a.seed,
        substreams: report::substreams(),
        threads,
        config: (&resolved).into(),
        outputs: Outputs {
            labels: "labels.csv".into(),
            report: "report.json".into(),
            similarity: "similarity.csv".into(),
            heatmap: "heatmap.pgm".into(),
            heatmap_order: "heatmap_order.csv".into(),
        },
        timings: Timings {
            read_ms,
            cluster_ms,
            write_ms: ms(t_write),
        },
    };
    staged.add("manifest.json", &json(&manifest)?).map_err(internal)?;
    staged.commit().map_err(internal)?;

    eprintln!(
        "{} clusters, {} scatter, K* = {}{}",
        rep.final_partition.k(),
        rep.final_partition.scatter_count(),
        rep.kstar,
        report.truth.as_ref().map(|t| format!(", ARI vs truth = {:.4}", t.ari)).unwrap_or_default()
    );
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(v).map_err(internal)?;
    out.push(b'\n');
    Ok(out)
}

/// Builds the dataset requested by `gen`.
pub fn generate(a: &GenArgs) -> kmh_core::Result<LabeledDataset> {
    match a.shape {
        Shape::Bullseye => {
            let d = BullseyeParams::default();
            datagen::gen_bullseye_with(
                BullseyeParams {
                    n_core: a.n_core.unwrap_or(d.n_core),
                    n_ring: a.n_ring.unwrap_or(d.n_ring),
                    noise_sd: a.noise_sd.unwrap_or(d.noise_sd),
                    ..d
                },
                a.seed,
            )
        }
        Shape::BananaSpheres => {
            let d = BananaSpheresParams::default();
            datagen::gen_banana_spheres_with(
                BananaSpheresParams {
                    n_banana: a.n_banana.unwrap_or(d.n_banana),
                    n_ring: a.n_ring.unwrap_or(d.n_ring),
                    n_outliers: a.n_outliers.unwrap_or(d.n_outliers),
                    ring_noise: a.noise_sd.unwrap_or(d.ring_noise),
                    outliers_as_scatter: a.outliers_as_scatter,
                    ..d
                },
                a.seed,
            )
        }
        Shape::Blobs => {
            let centers = datagen::simplex_centers(a.k, a.p, a.separation)?;
            datagen::gen_gaussian_blobs(&centers, &vec![a.n_per; a.k], a.sigma, a.seed)
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    let ds = generate(a).map_err(usage)?;
    let bytes = io::dataset_csv(&ds.data, &ds.truth).map_err(internal)?;
    match &a.output {
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let name = path
                .file_name()
                .with_context(|| format!("{} is not a file path", path.display()))
                .map_err(usage)?;
            let mut staged = io::Staged::new(dir).map_err(internal)?;
            staged.add(&name.to_string_lossy(), &bytes).map_err(internal)?;
            staged.commit().map_err(internal)?;
        }
        None => std::io::stdout().lock().write_all(&bytes).map_err(internal)?,
    }
    let params: Vec<String> = ds.descriptor.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{} n={} {}", ds.descriptor.shape, ds.data.n(), params.join(" "));
    Ok(())
}

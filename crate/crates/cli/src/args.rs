use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "kmh", version, about = "K-means + hierarchical merging of general-shaped clusters")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a CSV dataset.
    Run(RunArgs),
    /// Generate a synthetic dataset with a truth column.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mapping {
    BeforeJump,
    Shifted,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input CSV: one observation per line, optional header.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "kmh-out")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Known number of clusters; estimated when absent.
    #[arg(long)]
    pub kstar: Option<usize>,
    /// Number of candidate K-means entity counts.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Change-point candidates per entity count.
    #[arg(long = "L", default_value_t = kmh_core::pipeline::DEFAULT_L)]
    pub l: usize,
    /// Consensus replicates.
    #[arg(long = "B", default_value_t = kmh_core::consensus::DEFAULT_REPLICATES)]
    pub b: usize,
    /// Scatter-run cluster count and cap on entity counts.
    #[arg(long = "G")]
    pub g: Option<usize>,
    /// Scale every feature to zero mean and unit variance first.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = kmh_core::scatter::DEFAULT_FRAC)]
    pub scatter_frac: f64,
    /// Off-diagonal mean and coefficient-of-variation cutoffs for choosing
    /// single linkage, as `mean,cv`.
    #[arg(long, value_parser = parse_pair_f64, default_value = "0.3,1.0")]
    pub linkage_cutoffs: (f64, f64),
    /// Consensus subsample size cap.
    #[arg(long, default_value_t = kmh_core::consensus::DEFAULT_SUBSAMPLE)]
    pub subsample: usize,
    /// 1-based column holding ground-truth labels (excluded from features).
    #[arg(long)]
    pub truth_col: Option<usize>,
    /// K-means restarts per entity count.
    #[arg(long, default_value_t = kmh_core::pipeline::DEFAULT_STARTS)]
    pub starts: usize,
    /// Restarts of the scatter-removal run.
    #[arg(long)]
    pub scatter_starts: Option<usize>,
    /// Co-association threshold.
    #[arg(long, default_value_t = kmh_core::consensus::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Inclusive range of K searched by the Krzanowski criterion, as `lo,hi`.
    #[arg(long, value_parser = parse_pair_usize)]
    pub k_range: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = Mapping::BeforeJump)]
    pub cp_mapping: Mapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Bullseye,
    BananaSpheres,
    Blobs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub shape: Shape,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub n_core: Option<usize>,
    #[arg(long)]
    pub n_ring: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub n_banana: Option<usize>,
    /// Outliers per group.
    #[arg(long)]
    pub n_outliers: Option<usize>,
    /// Give planted outliers the scatter label 0.
    #[arg(long)]
    pub outliers_as_scatter: bool,
    /// Number of blobs.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Blob dimension.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Points per blob.
    #[arg(long, default_value_t = 100)]
    pub n_per: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Distance between blob centers.
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
}

fn split_pair(s: &str) -> Result<(&str, &str), String> {
    s.split_once(',').ok_or_else(|| format!("expected two comma-separated values, got `{s}`"))
}

fn parse_pair_f64(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = split_pair(s)?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_pair_usize(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = split_pair(s)?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

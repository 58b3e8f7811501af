use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "swarmcov", version, about = "Coverage error metric tooling for robot swarms")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file with default values for any flag; flags given on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all logical cores).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// Quadrature grid as M1xM2 rectangle-rule cells, overriding the default spacing min(delta/4, 0.5).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,

    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub quiet: bool,

    /// Where to write the run manifest (default: PREFIX_manifest.toml next to the outputs).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Error metric of one configuration.
    Error(ErrorArgs),
    /// Relative error of a controller run (settling, third quartile, extrema).
    Relerr(RelerrArgs),
    /// Multistart search for the smallest and largest realizable error.
    Extrema(ExtremaArgs),
    /// Monte Carlo sampling distribution of the error for i.i.d. robots.
    Pdf(PdfArgs),
    /// F and t tests of controller errors against a sampled distribution.
    Benchmark(BenchmarkArgs),
    /// Reference Metropolis random-walk controller.
    Simulate(SimulateArgs),
    /// Quadrature convergence study on one configuration.
    Quadstudy(QuadstudyArgs),
    /// Optimal blob radius and error over a range of swarm sizes.
    Sweep(SweepArgs),
    /// Discretization metric of one configuration under several tilings.
    Pitfall(PitfallArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TargetArgs {
    /// ring, ripple, uniform, or csv:PATH (gridded density).
    #[arg(long, default_value = "ring")]
    pub target: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ErrorArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Swarm configuration CSV.
    #[arg(long)]
    pub swarm: PathBuf,
    /// Also report mu on an M1xM2 regular partition.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    /// Blob normalization: domain or count.
    #[arg(long, default_value = "domain")]
    pub normalization: String,
}

#[derive(Debug, Args, Serialize)]
pub struct RelerrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Error series CSV (`t,e`).
    #[arg(long, conflicts_with = "trajectory")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
    /// Trajectory CSV; its error series is computed first.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    /// Read e- and e+ from PREFIX_summary.csv written by `extrema`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrema: Option<String>,
    #[arg(long, requires = "e_plus")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_minus: Option<f64>,
    #[arg(long, requires = "e_minus")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_plus: Option<f64>,
    /// Robots and radius for computing the extrema when none are given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtremaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub n: usize,
    /// Blob radius; omit to optimize it jointly within --delta-bounds (minimum only).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[arg(long, default_value = "0.5,12")]
    pub delta_bounds: String,
    #[arg(long, default_value_t = 10)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// uniform, annulus, region:x0,y0,x1,y1, or file:PATH.
    #[arg(long, default_value = "uniform")]
    pub init: String,
    /// Initial placement for the maximization: cluster, uniform, region:..., or file:PATH.
    #[arg(long, default_value = "cluster")]
    pub max_init: String,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    #[arg(long)]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PdfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Prefix of a `pdf` run; reads PREFIX_samples.csv.
    #[arg(long)]
    pub dist: String,
    /// Steady-state controller errors, one per line.
    #[arg(long, conflicts_with = "trajectory")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller_errors: Option<PathBuf>,
    /// Controller trajectory; errors after the settling time are used.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Writes PREFIX_verdict.csv when given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    /// Total walker steps.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub snap_every: usize,
    #[arg(long, default_value_t = 2.0)]
    pub sigma_step: f64,
    /// uniform, corner, or file:PATH.
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct QuadstudyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub swarm: PathBuf,
    /// Comma-separated rules.
    #[arg(long, default_value = "rectangle,trapezoid,simpson")]
    pub rules: String,
    /// Comma-separated node counts per axis (odd, ascending); default 25 counts from 25 to 1001.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    /// Writes PREFIX_study.csv; prints to stdout otherwise.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value = "22,44,79,128,200,256")]
    pub n_values: String,
    #[arg(long, default_value = "0.5,12")]
    pub delta_bounds: String,
    #[arg(long, default_value_t = 4)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "uniform")]
    pub init: String,
    /// Switch to annulus seeding from this N on (ring targets).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annulus_from: Option<usize>,
    #[arg(long)]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PitfallArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Configuration CSV; omit to use --random uniform positions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swarm: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1x1,2x2,4x4,8x8,16x16,64x64,256x256,1024x1024")]
    pub tilings: String,
    /// Writes PREFIX_pitfall.csv; prints to stdout otherwise.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

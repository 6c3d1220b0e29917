use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Worst-case contraction of gradient descent-ascent: closed-form rates,
/// tight instances, certificates and performance-estimation programs.
#[derive(Debug, Parser, Serialize, Deserialize)]
#[command(name = "saddle-pep", version)]
#[serde(rename_all = "kebab-case")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "SADDLE_PEP_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON object of flag values. Flags on the command line take precedence.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Closed-form one-step rates.
    #[command(subcommand)]
    Rate(RateCommand),
    /// Run GDA and record squared distances to the solution set.
    Run(RunArgs),
    /// One-step worst-case instance and its measured ratio.
    Tight(TightArgs),
    /// Build a dual certificate and check its identity on random data.
    Certify(CertifyArgs),
    /// Solve the performance-estimation SDP for one step.
    Pep(PepArgs),
    /// Compare the conjectured rate with the SDP and an empirical search.
    Conjecture(ConjectureArgs),
    /// Estimate the quadratic gradient growth constant by sampling.
    Qgg(QggArgs),
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateCommand {
    /// Rate at a single step, with the classical rate for comparison.
    Eval(RateEvalArgs),
    /// Rate over a grid of steps.
    Sweep(RateSweepArgs),
    /// Optimal step and rate.
    Optimal(RateOptimalArgs),
}

/// Constants shared by both blocks.
#[derive(Debug, Args, Serialize, Deserialize)]
pub struct Symmetric {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,

    #[arg(long)]
    pub mu: Option<f64>,

    #[arg(long = "Lxy")]
    #[serde(rename = "Lxy")]
    pub lxy: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct Constants {
    #[arg(long = "Lx")]
    #[serde(rename = "Lx")]
    pub lx: Option<f64>,

    #[arg(long = "Ly")]
    #[serde(rename = "Ly")]
    pub ly: Option<f64>,

    #[arg(long = "Lxy")]
    #[serde(rename = "Lxy")]
    pub lxy: Option<f64>,

    #[arg(long)]
    pub mux: Option<f64>,

    #[arg(long)]
    pub muy: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct RateEvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Symmetric,

    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RateSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Symmetric,

    /// Number of interior points of the admissible interval, or a
    /// comma-separated list of steps.
    #[arg(long)]
    pub t_grid: Option<String>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct RateOptimalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    Quadratic,
    Piecewise,
    Uncoupled,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunArgs {
    #[arg(long, value_enum, default_value_t = Example::Quadratic)]
    pub example: Example,

    /// Quadratic instance as JSON `{"A": .., "B": .., "C": ..}`.
    #[arg(long)]
    pub instance: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Symmetric,

    #[arg(long)]
    pub t: Option<f64>,

    #[arg(long, default_value_t = 50)]
    pub steps: usize,

    /// Comma-separated start point; drawn from the seed when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<String>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TightArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Symmetric,

    #[arg(long)]
    pub t: Option<f64>,

    /// Strong concavity of the second coordinate, in `[mu, L]`.
    #[arg(long)]
    pub mu_other: Option<f64>,

    /// Instance without strong convexity in x on which one step does not
    /// contract. Uses `--muy` and `--r`; `--mu` is ignored.
    #[arg(long)]
    pub lower_bound: bool,

    #[arg(long)]
    pub muy: Option<f64>,

    /// Distance of the start point from the saddle point.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Smooth strongly convex-strongly concave rate.
    StronglyConvex,
    /// Quadratic gradient growth rate.
    Qgg,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[arg(long, value_enum)]
    pub theorem: Option<Theorem>,

    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,

    #[arg(long)]
    pub mu: Option<f64>,

    #[arg(long = "muF")]
    #[serde(rename = "muF")]
    pub mu_f: Option<f64>,

    #[arg(long)]
    pub t: Option<f64>,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long, default_value_t = 3)]
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutArg {
    Full,
    Reduced,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Constants,

    #[arg(long)]
    pub t: Option<f64>,

    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,

    /// Quadratic gradient growth program with `L = max(Lx, Ly)`.
    #[arg(long)]
    pub qgg: bool,

    #[arg(long = "muF")]
    #[serde(rename = "muF")]
    pub mu_f: Option<f64>,

    #[arg(long, value_enum, default_value_t = LayoutArg::Full)]
    pub layout: LayoutArg,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConjectureArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub constants: Constants,

    /// Number of interior points of the admissible interval, or a
    /// comma-separated list of steps.
    #[arg(long)]
    pub t_grid: Option<String>,

    /// Random instances tried by the empirical search.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,

    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,

    #[arg(long, value_enum, default_value_t = LayoutArg::Reduced)]
    pub layout: LayoutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthExample {
    Piecewise,
    Uncoupled,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct QggArgs {
    #[arg(long, value_enum, default_value_t = GrowthExample::Piecewise)]
    pub example: GrowthExample,

    /// Points per axis of a tensor grid on `[lo, hi]²`. Without it a shifted
    /// Halton sample around the origin is used.
    #[arg(long)]
    pub grid: Option<usize>,

    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    pub lo: f64,

    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub hi: f64,

    /// Size of the Halton sample.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,

    /// Half-width of the Halton box.
    #[arg(long, default_value_t = 5.0)]
    pub radius: f64,
}

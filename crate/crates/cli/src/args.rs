use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omd_core::Rect;
use serde::{Deserialize, Serialize};

/// Orthomartingale decomposition and verification toolkit.
#[derive(Debug, Parser)]
#[command(name = "omd", version, about)]
pub struct Cli {
    /// TOML file with parameter defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Omit the timestamp from reports so that repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a coefficient element into martingale, boundary and coboundary parts.
    Decompose(DecomposeArgs),
    /// Rebuild the element from a decomposition.
    Reconstruct(ReconstructArgs),
    /// Evaluate the projective series conditions of an element.
    CheckCondition(ConditionArgs),
    /// Run a seeded Monte Carlo experiment and write the recorded statistics.
    Simulate(SimulateArgs),
    /// Statistical verification of limit theorems and inequalities.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// VC index and metric entropy of a rectangle class.
    Vc(VcArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Kolmogorov-Smirnov test of a normalized partial sum against its Gaussian limit.
    Clt(CltArgs),
    /// Covariance structure of the set-indexed partial-sum process.
    Wip(WipArgs),
    /// Moment inequality ratios.
    Moment(MomentArgs),
    /// Sub-exponential tail bound with a fitted constant.
    Tail(TailArgs),
    /// Hölder threshold, admissible exponent and tightness table.
    Holder(HolderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputArgs {
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Iid,
    Linear,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawArg {
    Rademacher,
    Gaussian,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldArgs {
    #[arg(long, value_enum)]
    pub field: Option<FieldKind>,
    /// Coefficient JSON of a linear field.
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub law: Option<LawArg>,
    /// Innovation variance of the Gaussian law.
    #[arg(long)]
    pub variance: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to OMD_WORKERS, then to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Generic,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeArgs {
    /// Coefficient JSON `{"d", "entries": [{"index", "coeff"}]}`.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructArgs {
    /// Decomposition JSON as written by `decompose`.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    ShiftedPast,
    HalfSpace,
    Linear,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditionArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Single axis (1-based); every axis when omitted.
    #[arg(long)]
    pub axis: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<ConditionKind>,
    #[arg(long, value_enum)]
    pub law: Option<LawArg>,
    #[arg(long)]
    pub variance: Option<f64>,
    /// Largest series index evaluated.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Monte Carlo replicas for p ≠ 2.
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    Endpoint,
    Points,
    Rects,
    SupModulus,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long, value_enum)]
    pub statistic: Option<StatisticKind>,
    /// Evaluation point `t1,...,td` (repeatable).
    #[arg(long = "point", value_parser = parse_point)]
    #[serde(rename = "point")]
    pub points: Option<Vec<Point>>,
    /// Rectangle `s1,...,sd:t1,...,td` (repeatable).
    #[arg(long = "rect", value_parser = parse_rect)]
    #[serde(rename = "rect")]
    pub rects: Option<Vec<Rect>>,
    /// Dyadic level of the sup-modulus grid.
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// Variance of the martingale part of the decomposition.
    Martingale,
    /// Variance of the field value at the origin.
    Marginal,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetArgs {
    /// Explicit limit variance per unit volume; overrides `--target`.
    #[arg(long)]
    pub target_variance: Option<f64>,
    #[arg(long, value_enum)]
    pub target: Option<TargetKind>,
    /// Multiplier applied to the limit variance.
    #[arg(long)]
    pub variance_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CltArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Upper corner `t` of the quadrant `[0,t]`; the unit cube when omitted.
    #[arg(long, value_parser = parse_point)]
    pub t: Option<Point>,
    /// KS threshold; `2 · 1.358 / √replicas` when omitted.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct WipArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Rectangles `s:t` taken in consecutive pairs (A1 B1 A2 B2 ...).
    #[arg(long = "rect", value_parser = parse_rect)]
    #[serde(rename = "rect")]
    pub rects: Option<Vec<Rect>>,
    #[arg(long)]
    pub relative_tolerance: Option<f64>,
    #[arg(long)]
    pub se_multiplier: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethodArg {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct MomentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    /// Moment orders (comma separated).
    #[arg(long = "p", value_delimiter = ',')]
    #[serde(rename = "p")]
    pub ps: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub method: Option<MomentMethodArg>,
    /// Largest admissible `ratio / p^{d/2}`.
    #[arg(long)]
    pub kappa_max: Option<f64>,
    /// Smallest admissible `ratio / p^{d/2}`.
    #[arg(long)]
    pub kappa_min: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TailArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub q: Option<f64>,
    /// Thresholds `x` (comma separated).
    #[arg(long = "x", value_delimiter = ',')]
    #[serde(rename = "x")]
    pub xs: Option<Vec<f64>>,
    /// Normalized Orlicz reference `R`; 1 for fields bounded by one.
    #[arg(long)]
    pub orlicz_reference: Option<f64>,
    /// Largest admissible fitted constant.
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Dyadic level of the evaluation grid.
    #[arg(long)]
    pub level: Option<u32>,
    /// Exceedance levels (comma separated).
    #[arg(long = "eps", value_delimiter = ',')]
    #[serde(rename = "eps")]
    pub epsilons: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct VcArgs {
    /// `Q<d>` for quadrants or `Q'<d>` for boxes.
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Also compute covering numbers and entropy integrals.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub entropy: Option<bool>,
    /// Dyadic parameter-grid level for covering numbers.
    #[arg(long)]
    pub level: Option<u32>,
    /// Covering radii (comma separated).
    #[arg(long = "eps", value_delimiter = ',')]
    #[serde(rename = "eps")]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Fit range `lo,hi` for the covering exponent and envelope constant.
    #[arg(long, value_delimiter = ',')]
    pub fit: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

/// Comma-separated coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

pub fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("invalid coordinate {v:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Point)
}

pub fn parse_rect(s: &str) -> Result<Rect, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected `s1,...:t1,...`, got {s:?}"))?;
    Rect::new(parse_point(lo)?.0, parse_point(hi)?.0).map_err(|e| e.to_string())
}

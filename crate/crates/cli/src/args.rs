use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use wishent::{ProtocolKind, YRoute};

pub const DEFAULT_OUT: &str = "wishent-out";

#[derive(Debug, Parser)]
#[command(name = "wishent", version, about = "Monte Carlo entanglement growth in Gaussian coefficient ensembles")]
pub struct Cli {
    /// Output directory (default: $WISHENT_OUT, else ./wishent-out)
    #[arg(long, global = true, env = "WISHENT_OUT")]
    pub out: Option<PathBuf>,

    /// Worker threads; results never depend on this
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// TOML file whose keys override the subcommand's flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Re-run the command recorded in a manifest
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Ensemble size, symmetry class and sampling controls.
#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct Ensemble {
    /// Rows of C (dimension of subsystem A)
    #[arg(long = "N", default_value_t = 64)]
    #[serde(rename = "N")]
    pub n: usize,
    /// Extra columns of C
    #[arg(long, default_value_t = 0)]
    pub nu0: usize,
    /// 1 = real, 2 = complex
    #[arg(long, default_value_t = 1)]
    pub beta: u8,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Sample one protocol point: spectra and per-sample measures
    Sample(SampleArgs),
    /// Ensemble averages along a protocol family
    Sweep(SweepArgs),
    /// Eigenvalue SDE from a near-separable start
    Dyson(DynamicsArgs),
    /// Exact matrix flow from the separable state
    Langevin(DynamicsArgs),
    /// Trace-conditioned entropies of stationary Wishart spectra
    Conditional(ConditionalArgs),
    /// Fit the saturation model to a sweep CSV
    Fit(FitArgs),
    /// Deep-Y measures against N log2 N
    Scaling(ScalingArgs),
    /// SVG plots (and theory curves) from an output directory
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Sweep(_) => "sweep",
            Command::Dyson(_) => "dyson",
            Command::Langevin(_) => "langevin",
            Command::Conditional(_) => "conditional",
            Command::Fit(_) => "fit",
            Command::Scaling(_) => "scaling",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: Ensemble,
    #[arg(long)]
    pub protocol: ProtocolKind,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: Ensemble,
    #[arg(long)]
    pub protocol: ProtocolKind,
    /// Explicit parameter values (μ for EB, a=b for EP/EE), ordered by increasing Y
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub grid: Vec<f64>,
    /// Without --grid: this many Y values, geometric in [1e-3, 0.95]·sup Y
    #[arg(long, default_value_t = 12)]
    pub y_points: usize,
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    /// Route for Y: closed-form sums or the general profile formula
    #[arg(long, default_value = "closed")]
    pub y_from: YRoute,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct DynamicsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: Ensemble,
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    /// Y values at which the path ensemble is recorded
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.4,0.8,1.6")]
    pub checkpoints: Vec<f64>,
    /// Dyson only: Y at which spectra are sampled directly before integrating
    #[arg(long, default_value_t = 0.05)]
    pub y_start: f64,
    /// Dyson only: base step (default 1e-4/N)
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ConditionalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: Ensemble,
    /// Positive number, or `auto` for the value giving mean trace 1
    #[arg(long, default_value = "auto")]
    pub gamma: String,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Sweep CSV to fit
    #[arg(long)]
    pub input: PathBuf,
    /// R1, R2 or both
    #[arg(long, default_value = "both")]
    pub measure: String,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
    pub ns: Vec<usize>,
    #[arg(long, default_value = "EE")]
    pub protocol: ProtocolKind,
    /// Deep-Y parameter (μ for EB, a=b for EP/EE)
    #[arg(long, default_value_t = 1e3)]
    pub param: f64,
    #[arg(long, default_value_t = 0)]
    pub nu0: usize,
    #[arg(long, default_value_t = 1)]
    pub beta: u8,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Directory holding earlier outputs (default: the output directory)
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perceptor_core::kde::Bandwidth;
use perceptor_core::{Method, Similarity};

#[derive(Debug, Parser)]
#[command(name = "perceptor", version, about = "Predict classifier accuracy from readout sum statistics")]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true, env = "PERCEPTOR_THREADS")]
    pub threads: Option<usize>,

    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict accuracy from activations and readout weights (JSON report).
    Predict(PredictArgs),
    /// Delayed-recall experiment on an integer echo state network (CSV per delay).
    Esn(EsnArgs),
    /// Cross-validated random-feature classifier over a parameter grid (CSV).
    Rvfl(RvflArgs),
    /// Predicted vs actual accuracy on random class subsets (CSV scatter).
    Subproblem(SubproblemArgs),
    /// Predict accuracy from readout weights alone using noisy filter copies (CSV).
    ReadoutOnly(ReadoutOnlyArgs),
    /// Pearson, Kendall tau and a bias line for two columns of a CSV (JSON).
    Metrics(MetricsArgs),
    /// Correlated binary Gaussian sweep (CSV).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Eq1,
    Eq2,
    #[value(name = "eq3-mc")]
    Eq3Mc,
    Kde,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Eq1 => Method::Eq1,
            MethodArg::Eq2 => Method::Eq2,
            MethodArg::Eq3Mc => Method::Eq3Mc,
            MethodArg::Kde => Method::Eq2Kde,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimilarityArg {
    Dot,
    Cosine,
}

impl From<SimilarityArg> for Similarity {
    fn from(s: SimilarityArg) -> Self {
        match s {
            SimilarityArg::Dot => Similarity::Dot,
            SimilarityArg::Cosine => Similarity::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorsArg {
    Empirical,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EsnReadoutArg {
    Codebook,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RvflReadoutArg {
    Centroid,
    Ridge,
}

#[derive(Debug, Clone, Args)]
pub struct MethodOpts {
    #[arg(long, value_enum, default_value = "eq2")]
    pub method: MethodArg,

    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,

    /// KDE bandwidth: `auto` (Silverman) or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    pub bandwidth: Bandwidth,
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    s.parse().map_err(|e: perceptor_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Labeled activations, one `label,a1,...,aN` row per sample.
    #[arg(long)]
    pub activations: PathBuf,

    /// Readout weights as a `D x N` matrix file.
    #[arg(long)]
    pub weights: PathBuf,

    /// Optional bias as a `1 x D` or `D x 1` matrix file (dot similarity only).
    #[arg(long)]
    pub bias: Option<PathBuf>,

    #[command(flatten)]
    pub method: MethodOpts,

    #[arg(long, value_enum, default_value = "dot")]
    pub similarity: SimilarityArg,

    #[arg(long, value_enum, default_value = "empirical")]
    pub priors: PriorsArg,

    /// Treat the labels as ground truth and also report the empirical accuracy.
    #[arg(long)]
    pub with_empirical: bool,
}

#[derive(Debug, Args)]
pub struct EsnArgs {
    /// Reservoir size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Alphabet size.
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    #[arg(long, default_value_t = 4.0)]
    pub kappa: f64,

    /// Delays: `a..b` (inclusive), a comma list, or a single value.
    #[arg(long, alias = "delay", default_value = "0..10")]
    pub delays: String,

    /// Independent simulations averaged per delay.
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,

    #[arg(long, value_enum, default_value = "codebook")]
    pub readout: EsnReadoutArg,

    /// Ridge parameter of the regression readout.
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,

    #[arg(long, value_enum, default_value = "cosine")]
    pub similarity: SimilarityArg,

    #[arg(long, default_value_t = 10_000)]
    pub train_len: usize,

    #[arg(long, default_value_t = 10_000)]
    pub test_len: usize,

    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,

    /// Per-symbol amplitudes, comma separated (one per symbol).
    #[arg(long, allow_hyphen_values = true)]
    pub amplitudes: Option<String>,
}

#[derive(Debug, Args)]
pub struct RvflArgs {
    /// Dataset file, one `label,f1,...,fF` row per sample.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, value_enum, default_value = "ridge")]
    pub readout: RvflReadoutArg,

    /// Hidden sizes: comma list or `a..b:step`.
    #[arg(long, default_value = "50..1500:50")]
    pub n: String,

    /// Ridge parameters: comma list, or `2^a..b` for powers of two.
    #[arg(long, default_value = "2^-10..5", allow_hyphen_values = true)]
    pub lambda: String,

    /// Activation parameters: comma list.
    #[arg(long, default_value = "1,3,5,7")]
    pub kappa: String,

    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Args)]
pub struct SubproblemArgs {
    /// Labeled activations of each network (repeat; paired with --weights by position).
    #[arg(long, required = true)]
    pub activations: Vec<PathBuf>,

    /// Readout weights of each network (repeat).
    #[arg(long, required = true)]
    pub weights: Vec<PathBuf>,

    /// Sub-problem sizes, comma list.
    #[arg(long, default_value = "2,4,8,16,32,64,128,256,512,768")]
    pub subproblem_sizes: String,

    /// Random sub-problems per size and network.
    #[arg(long, default_value_t = 10)]
    pub per_size: usize,

    #[command(flatten)]
    pub method: MethodOpts,

    #[arg(long, value_enum, default_value = "dot")]
    pub similarity: SimilarityArg,
}

#[derive(Debug, Args)]
pub struct ReadoutOnlyArgs {
    /// Readout weights (repeat for several networks).
    #[arg(long, required = true)]
    pub weights: Vec<PathBuf>,

    #[arg(long, value_enum, default_value = "dot")]
    pub similarity: SimilarityArg,

    /// Noise levels in dB: comma list or `a..b[:step]`.
    #[arg(long, default_value = "8..17", allow_hyphen_values = true)]
    pub noise_db: String,

    /// Noisy copies per filter.
    #[arg(long, default_value_t = 50)]
    pub reps: usize,

    /// Repeated experiments averaged per level.
    #[arg(long, default_value_t = 1)]
    pub experiments: usize,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV with a header row naming its columns.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = "predicted")]
    pub x: String,

    #[arg(long, default_value = "actual")]
    pub y: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "0.25..2:0.25", allow_hyphen_values = true)]
    pub mu: String,

    #[arg(long, default_value = "0.5,1,2")]
    pub sigma: String,

    #[arg(long, default_value = "-0.9,-0.6,-0.3,0,0.3,0.6,0.9", allow_hyphen_values = true)]
    pub rho: String,

    /// Draws per cell.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
}

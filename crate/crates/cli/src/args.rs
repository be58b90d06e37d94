use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum, ValueHint};

/// Bayesian covariance estimation through sparse inverse Cholesky factors.
///
/// Data files hold N replicate rows by n site columns; location files hold
/// one site per row. Indices in every file are zero-based.
#[derive(Debug, Parser)]
#[command(name = "sicf", version, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Directory for all outputs, created if missing.
    #[arg(long, global = true, default_value = ".", value_hint = ValueHint::DirPath)]
    pub out_dir: PathBuf,
    /// key=value lines or a JSON object (a manifest works) supplying defaults
    /// for any flag; flags on the command line take precedence.
    #[arg(long, global = true, value_hint = ValueHint::FilePath)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Gaussian replicates from a known covariance.
    Simulate(SimulateArgs),
    /// Fit hyperparameters and the factor to data.
    Fit(FitArgs),
    /// Draw fields from a fitted factor or from the posterior predictive.
    Sample(SampleArgs),
    /// Compare estimators by KL divergence and log score on simulated data.
    Benchmark(BenchmarkArgs),
    /// Gibbs sampler for data observed with Gaussian noise.
    Gibbs(GibbsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Sample(_) => "sample",
            Command::Benchmark(_) => "benchmark",
            Command::Gibbs(_) => "gibbs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Matern,
    Exponential,
    Cauchy,
    Paciorek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Euclid,
    Corr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Eb,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleMode {
    Map,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Marginal,
    Joint,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Matern)]
    pub model: ModelKind,
    /// Marginal variance (theta1 for the exponential model).
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    /// Range; the exponential model uses exp(-d / range).
    #[arg(long, default_value_t = 0.25)]
    pub range: f64,
    #[arg(long, default_value_t = 1.0)]
    pub smoothness: f64,
    /// Cauchy shape exponent.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Cauchy memory exponent.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Regular ROWSxCOLS grid on the unit square, endpoints included.
    #[arg(long, conflicts_with = "random")]
    pub grid: Option<String>,
    /// Number of sites uniform on the unit hypercube.
    #[arg(long)]
    pub random: Option<usize>,
    /// Dimension of random sites.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Number of replicates N.
    #[arg(long, default_value_t = 50)]
    pub nrep: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Data, N rows by n columns.
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub y: PathBuf,
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub locations: PathBuf,
    #[arg(long, value_enum, default_value_t = FitMode::Eb)]
    pub mode: FitMode,
    #[arg(long, value_enum, default_value_t = Metric::Euclid)]
    pub metric: Metric,
    /// Largest conditioning-set size stored.
    #[arg(long, default_value_t = 50)]
    pub m_max: usize,
    #[arg(long, value_enum, default_value_t = Convention::Marginal)]
    pub convention: Convention,
    /// Starting theta as "theta1,theta2,theta3".
    #[arg(long)]
    pub init: Option<String>,
    /// MH iterations (bayes mode).
    #[arg(long, default_value_t = 20_000)]
    pub n_iter: usize,
    /// MH burn-in; half of n-iter when omitted.
    #[arg(long)]
    pub n_burn: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Output directory of an earlier `fit`.
    #[arg(long, value_hint = ValueHint::DirPath)]
    pub fit_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = SampleMode::Map)]
    pub mode: SampleMode,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Training data (bayes mode).
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub y: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Estimator tags, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "scov,scovt,mle,exp,ours-map,ours-bayes")]
    pub estimators: Vec<String>,
    /// Training replicate counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,50")]
    pub nreps: Vec<usize>,
    /// Number of simulation seeds, derived from the master seed.
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    /// Held-out replicates for the log score.
    #[arg(long, default_value_t = 100)]
    pub test_nrep: usize,
    /// Taper range for scovt; half the largest site distance when omitted.
    #[arg(long)]
    pub taper_range: Option<f64>,
    #[arg(long, value_enum, default_value_t = Metric::Euclid)]
    pub metric: Metric,
    #[arg(long, default_value_t = 50)]
    pub m_max: usize,
    /// MH iterations for ours-bayes.
    #[arg(long, default_value_t = 2_000)]
    pub n_iter: usize,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    /// Noisy data, N rows by n columns.
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub w: PathBuf,
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub locations: PathBuf,
    /// Known noise variance; when omitted tau2 gets an IG(a0, b0) prior.
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub a0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub b0: f64,
    #[arg(long, default_value_t = 2_000)]
    pub sweeps: usize,
    /// Burn-in sweeps; half of sweeps when omitted.
    #[arg(long)]
    pub n_burn: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub mh_steps: usize,
    #[arg(long, default_value_t = 30)]
    pub m_max: usize,
}

use std::path::PathBuf;

use bpsurv::likelihood::ParametricFamily;
use bpsurv::optim::Algorithm;
use bpsurv::ModelKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bpsurv", version, about = "Bernstein-polynomial survival regression")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "BPSURV_THREADS")]
    pub threads: Option<usize>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only print errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and print its summary.
    Fit(FitArgs),
    /// Survivor curves at covariate profiles.
    Survcurve(SurvcurveArgs),
    /// Cox-Snell residuals with their Kaplan-Meier diagnostic.
    ///
    /// With --load, data flags choose the data to evaluate; the training data are used otherwise.
    Residuals(ResidualsArgs),
    /// Run a Monte-Carlo scenario.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "fixture")]
    pub data: Option<PathBuf>,
    /// Built-in dataset: larynx or veteran.
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub time_col: Option<String>,
    #[arg(long)]
    pub status_col: Option<String>,
    /// Comma list of covariates; `cat:<col>:<ref>` marks a factor.
    #[arg(long)]
    pub covariates: Option<String>,
}

impl DataArgs {
    pub fn is_given(&self) -> bool {
        self.data.is_some() || self.fixture.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ph,
    Po,
    Aft,
    /// Parametric Weibull AFT (maximum likelihood only).
    Waft,
    /// Parametric log-logistic AFT (maximum likelihood only).
    Llaft,
}

pub enum ModelChoice {
    Bp(ModelKind),
    Parametric(ParametricFamily),
}

impl ModelArg {
    pub fn choice(self) -> ModelChoice {
        match self {
            ModelArg::Ph => ModelChoice::Bp(ModelKind::Ph),
            ModelArg::Po => ModelChoice::Bp(ModelKind::Po),
            ModelArg::Aft => ModelChoice::Bp(ModelKind::Aft),
            ModelArg::Waft => ModelChoice::Parametric(ParametricFamily::Waft),
            ModelArg::Llaft => ModelChoice::Parametric(ParametricFamily::Llaft),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproachArg {
    Mle,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Bfgs,
    Lbfgs,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Bfgs => Algorithm::Bfgs,
            AlgorithmArg::Lbfgs => Algorithm::Lbfgs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProposalArg {
    Diagonal,
    Dense,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "ph")]
    pub model: ModelArg,
    /// Defaults to bayes for BP models and mle for the parametric ones.
    #[arg(long, value_enum)]
    pub approach: Option<ApproachArg>,
    /// Polynomial degree; defaults to ceil(sqrt(n)).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub degree: Option<u32>,
    /// Prior preset: prior1, prior2, prior3 or prior4.
    #[arg(long)]
    pub prior_preset: Option<String>,
    /// Prior on standardized coefficients, e.g. `normal(0,4)`.
    #[arg(long)]
    pub prior_beta: Option<String>,
    /// Prior on BP coefficients: `lognormal(m,s)`, `gamma(a,b)` or `invgamma(a,b)`.
    #[arg(long)]
    pub prior_bp: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 2000)]
    pub iter: usize,
    /// Defaults to half of `--iter`.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Metropolis proposals per iteration; defaults to 50 per parameter.
    #[arg(long)]
    pub steps_per_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "diagonal")]
    pub proposal: ProposalArg,
    #[arg(long, value_enum, default_value = "bfgs")]
    pub algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fit on the raw covariate scale.
    #[arg(long)]
    pub no_scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Confidence or credibility level for intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
    /// Store the fit as a JSON artifact.
    #[arg(long)]
    pub save: Option<PathBuf>,
    /// Write posterior draws (natural scale) to a CSV file.
    #[arg(long)]
    pub draws: Option<PathBuf>,
}

/// A fit loaded from an artifact or refitted from data and model flags.
#[derive(Debug, Args)]
pub struct FitSource {
    /// Fit artifact written by `fit --save`.
    #[arg(long)]
    pub load: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SurvcurveArgs {
    #[command(flatten)]
    pub source: FitSource,
    /// CSV of covariate profiles, one per row, in the fit's input columns.
    #[arg(long)]
    pub newdata: PathBuf,
    /// Comma list of evaluation times.
    #[arg(long, conflicts_with = "grid")]
    pub times: Option<String>,
    /// Number of equally spaced times from 0 to the largest observed time.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// HPD band probability for Bayesian fits.
    #[arg(long, default_value_t = 0.95)]
    pub band: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResidualsArgs {
    #[command(flatten)]
    pub source: FitSource,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory for replications.csv, report.json and censoring.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario's replication count.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

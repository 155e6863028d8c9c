use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod run;
mod suites;

/// Stationary subspace analysis, change-point detection and
/// non-stationarity aware classification.
#[derive(Debug, Parser)]
#[command(name = "nonstat", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct Global {
    /// Base seed for every stochastic step.
    #[arg(long, global = true, env = "NONSTAT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for experiment realizations (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory receiving all outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Fit a stationary or maximally non-stationary projection.
    Ssa(SsaArgs),
    /// Choose the stationary dimension with the likelihood-ratio test.
    SelectDs(SelectDsArgs),
    /// Run a change-point detector.
    Detect(DetectArgs),
    /// Train and evaluate a linear classifier.
    Classify(ClassifyArgs),
    /// Run a Monte-Carlo experiment suite.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Subcommand, serde::Serialize)]
pub enum GenCommand {
    /// Markov-switching mixture for change-point detection.
    Cpd(GenCpdArgs),
    /// Two-class simulation.
    Classif(GenClassifArgs),
}

#[derive(Debug, Args, serde::Serialize)]
pub struct GenCpdArgs {
    #[arg(long = "dim", short = 'D')]
    pub dim: usize,
    #[arg(long)]
    pub ds: usize,
    /// Defaults to `D - ds`.
    #[arg(long)]
    pub dn: Option<usize>,
    #[arg(long, default_value_t = 1.8)]
    pub q: f64,
    #[arg(long, default_value_t = 200)]
    pub n_epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub epoch_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Simple,
    Outliers,
    Hard,
    Tapered,
    SubspaceSimple,
    SubspaceRealistic,
    TransferSmall,
    TransferLarge,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct GenClassifArgs {
    #[arg(long, value_enum)]
    pub variant: VariantName,
    /// Variant parameter: outlier rate, separation, a_ns, kappa or a8.
    #[arg(long)]
    pub param: Option<f64>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SsaArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of stationary sources to extract.
    #[arg(long, conflicts_with = "dn", required_unless_present = "dn")]
    pub ds: Option<usize>,
    /// Number of non-stationary sources to extract (maximizes).
    #[arg(long)]
    pub dn: Option<usize>,
    /// Maximize the non-stationarity of the `--ds`/`--dn` projection.
    #[arg(long)]
    pub maximize: bool,
    #[arg(long, default_value_t = 10)]
    pub n_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SelectDsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Significance level of the stationarity test.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long, default_value_t = 10)]
    pub n_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Slcd,
    Cusum,
    Kl,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Cluster count (slcd), log-ratio threshold (cusum) or switching
    /// penalty (kl).
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    /// Number of epochs (slcd).
    #[arg(long)]
    pub n_epochs: Option<usize>,
    /// Window length (cusum, kl) and epoch length of the report.
    #[arg(long)]
    pub window: Option<usize>,
    /// Epoch length the CUSUM detections are reported at (default: window).
    #[arg(long)]
    pub epoch_len: Option<usize>,
    /// Kernel bandwidth (kl); estimated from the data when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated CUSUM variance grid (default: around the data variance).
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Lda,
    Rlda,
    Gradlda,
    Slda,
    Randlda,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodName,
    /// Trade-off for slda/randlda.
    #[arg(long, conflicts_with = "grid")]
    pub alpha: Option<f64>,
    /// Comma-separated cross-validation grid for slda.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Epochs the training series is split into for the penalty.
    #[arg(long, default_value_t = 7)]
    pub n_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct ExperimentArgs {
    /// linkage_panels, cusum_panels, kl_panels, p_values, slda_subspace or
    /// transfer.
    #[arg(long)]
    pub suite: String,
    #[arg(long)]
    pub realizations: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

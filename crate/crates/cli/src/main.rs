//! `recid`: featurize, train, cross-validate and audit recidivism risk models.

mod commands;
mod error;
mod input;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "recid", version, about = "Interpretable recidivism risk models")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic regional dataset.
    Synth(SynthArgs),
    /// Expand numeric features into binary stumps.
    Featurize(FeaturizeArgs),
    /// Fit one model on the whole input, tuning its setting by cross-validation.
    Train(TrainArgs),
    /// Score records with a trained model.
    Predict(PredictArgs),
    /// Nested cross-validation.
    Cv(CvArgs),
    /// Train on one region and test on another.
    Xregion(XregionArgs),
    /// Arnold PSA NCA and NVCA scores for every record.
    Psa(PsaArgs),
    /// Calibration, balance and group AUC audit of a scored file.
    Audit(AuditArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Record CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// `kentucky`, `broward` or a column declaration file. Inferred from the header when omitted.
    #[arg(long)]
    pub schema: Option<String>,
    /// Build labels from convicted events only.
    #[arg(long)]
    pub convicted_only: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// l1, l2, stumps, riskslim, cart or constant.
    #[arg(long)]
    pub model: String,
    /// Outcome, e.g. `general_two_year`.
    #[arg(long, default_value = "general_two_year")]
    pub label: String,
    /// Training configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stump basis file for stumps and riskslim.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stratify folds by label.
    #[arg(long)]
    pub stratify: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// kentucky or broward.
    #[arg(long, default_value = "kentucky")]
    pub region: String,
    /// Region profile (TOML); replaces the built-in profile of `--region`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Stump basis file. Derived from the input when omitted and written next to the output.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model JSON; a readable rendering goes to `<output>.txt`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Result JSON, or a one-line summary when the name ends in `.csv`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct XregionArgs {
    /// Source region records.
    #[command(flatten)]
    pub data: DataArgs,
    /// Target region records.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub target_schema: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PsaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Scored CSV with a score column, a 0/1 label column and the attribute.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub attribute: String,
    #[arg(long, default_value = "general_two_year")]
    pub label: String,
    #[arg(long, default_value = "score")]
    pub score_column: String,
    /// Audit thresholds (TOML).
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Group to leave out; repeatable.
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Report JSON; calibration curves go to `<output>.curves.csv`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(cli.command, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end. Every command reads one JSON [`RunConfig`], writes
//! its artifacts plus a `manifest.json` into the output directory and maps
//! failures to exit codes: 2 for configuration or input problems, 3 for
//! numerical divergence, 4 when every evaluated model failed.

mod commands;
mod config;
mod manifest;
mod report;

pub use commands::{run, CommandOutcome};
pub use config::{DataSource, EvaluationBlock, PreprocessingBlock, RunConfig, SplitBlock};
pub use manifest::{InputFingerprint, RunManifest};
pub use report::{cv_csv, metrics_csv, metrics_markdown, read_metrics_csv, trace_csv, tuning_csv, MetricsCsvRow};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    AllFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::AllFailed(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Omit wall-clock timestamps from Markdown reports.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Simulate charge cycles and write them as a dataset CSV.
    Synth(CommonArgs),
    /// Fit one configured model and save its weights and training trace.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: String,
    },
    /// Fit every configured model and write a comparison table.
    Compare(CommonArgs),
    /// K-fold cross-validation of one configured model.
    Cv {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: String,
    },
    /// Run the base / stage1 / stage2 tuning ladder.
    Stages(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Synth(c) | Command::Compare(c) | Command::Stages(c) => c,
            Command::Train { common, .. } | Command::Cv { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train { .. } => "train",
            Command::Compare(_) => "compare",
            Command::Cv { .. } => "cv",
            Command::Stages(_) => "stages",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "voltcast", version, about = "Battery charging-voltage forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

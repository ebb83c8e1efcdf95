//! `stm`: synthetic generation, source extraction, training, evaluation and
//! analytics for the source topic model.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 I/O, 4 internal
//! consistency.

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stm_core::{Error, ErrorKind};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: 3,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err.kind() {
            ErrorKind::Validation => 2,
            ErrorKind::Io => 3,
            ErrorKind::Internal => 4,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Parser, Debug)]
#[command(name = "stm", version, about = "Source topic model pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Root seed for every random stream (default 0).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Source-type label space, one `affiliation-role` label per line.
    #[arg(long, value_name = "FILE")]
    pub labels_file: Option<PathBuf>,
}

/// Model shape flags.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    /// Number of document-types (default 20).
    #[arg(long)]
    pub doc_types: Option<usize>,

    /// Number of topics (default 25).
    #[arg(long)]
    pub topics: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus and its ground truth.
    Generate(commands::GenerateArgs),
    /// Extract named sources and word switches from parsed documents.
    Extract(commands::ExtractArgs),
    /// Train the model and write a snapshot plus a log-joint trace.
    Train(commands::TrainArgs),
    /// Score a trained snapshot against ground truth or gold labels.
    Evaluate(commands::EvaluateArgs),
    /// Write source-type reports for a trained snapshot.
    Analyze(commands::AnalyzeArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Extract(args) => commands::extract(args),
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Analyze(args) => commands::analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}

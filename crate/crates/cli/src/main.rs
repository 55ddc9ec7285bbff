//! `nrpa`: prepare review corpora, train, evaluate, ablate, sweep and inspect.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nrpa_core::NrpaError;

#[derive(Parser)]
#[command(
    name = "nrpa",
    version,
    about = "Review-based rating prediction with personalized attention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a review corpus, build the vocabulary and split, and write a dataset directory.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        /// amazon-json or csv
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
    },
    /// Train on a prepared dataset; writes model.nrpa, history.csv and manifest.txt.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pretrained vectors (`token v1 .. vd` per line) for the word embedding.
        #[arg(long)]
        word_vectors: Option<PathBuf>,
    },
    /// Score a checkpoint on the validation or test split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// val or test
        #[arg(long)]
        split: String,
        /// e.g. word=uniform,review=uniform (default: the trained variant)
        #[arg(long)]
        ablation: Option<String>,
        /// Clamp predictions to [1, 5] before scoring.
        #[arg(long)]
        clip: bool,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Write per-example attention weights as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Metrics CSV (default: eval-<split>.csv next to the checkpoint).
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Train all six attention variants and write their test MSE.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrain per ID-embedding size and write the best validation MSE.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
        dims: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Show the prediction and attention weights for one user and item.
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        item: String,
        /// Print the JSON trace record instead of the table.
        #[arg(long)]
        json: bool,
    },
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<NrpaError> for CliError {
    fn from(e: NrpaError) -> Self {
        let code = match e {
            NrpaError::NonFinite(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Prepare {
            input,
            format,
            out,
            seed,
            min_count,
        } => commands::prepare(&input, &format, &out, seed, min_count),
        Command::Train {
            data,
            config,
            out,
            word_vectors,
        } => commands::train(&data, &config, &out, word_vectors.as_deref()),
        Command::Eval {
            checkpoint,
            data,
            split,
            ablation,
            clip,
            threads,
            trace,
            metrics,
        } => commands::eval(&commands::EvalArgs {
            checkpoint,
            data,
            split,
            ablation,
            clip,
            threads,
            trace,
            metrics,
        }),
        Command::Ablate { data, config, out } => commands::ablate(&data, &config, &out),
        Command::Sweep {
            data,
            config,
            dims,
            out,
        } => commands::sweep(&data, &config, &dims, &out),
        Command::Inspect {
            checkpoint,
            data,
            user,
            item,
            json,
        } => commands::inspect(&checkpoint, &data, &user, &item, json),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

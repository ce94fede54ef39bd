//! Command-line driver: corpus generation, training, attribution,
//! evaluation, and nearest-neighbor queries, all reproducible from a seed.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 1 on internal
//! errors.

mod commands;
mod render;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ctxdecomp", version, about = "Phrase-level attribution for LSTM sentiment classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cd,
    Loo,
    Grad,
    Ig,
    Cell,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RenderArg {
    Ansi,
    Html,
    Report,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sentiment corpus with parse trees.
    GenCorpus {
        /// Output directory for train/valid/test tree files.
        #[arg(long)]
        out: PathBuf,
        /// Number of reviews to generate (split 80/10/10).
        #[arg(long, default_value_t = 6250)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the LSTM classifier and write a model file plus training log.
    Train {
        /// Directory with train/valid data (`train.trees`+`valid.trees`,
        /// or `train.tsv`+`valid.tsv`).
        #[arg(long)]
        data: PathBuf,
        /// Output directory for `model.ctxd` and `train_log.txt`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        #[arg(long, default_value_t = 16)]
        embed: usize,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 4)]
        patience: usize,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        #[arg(long, default_value_t = 5.0)]
        clip: f64,
        /// Optional pre-trained embedding file (`token v1 .. vD` lines).
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Score the words (or one span) of a sentence with chosen methods.
    Attribute {
        #[arg(long)]
        model: PathBuf,
        /// Sentence as whitespace-separated tokens.
        #[arg(long)]
        sentence: Option<String>,
        /// File with one sentence per line (alternative to --sentence).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Span `q:r` (1-based, inclusive) to score instead of all words.
        #[arg(long)]
        span: Option<String>,
        #[arg(long, default_value_t = 300)]
        ig_steps: usize,
        #[arg(long, value_enum, default_value_t = RenderArg::Ansi)]
        render: RenderArg,
        /// Output directory for html/report renders.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every evaluation protocol the data supports; write a report.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Directory with train/valid/test data.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Methods to evaluate.
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[arg(long, default_value_t = 300)]
        ig_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Nearest corpus phrases to a query in the phrase-embedding space.
    Neighbors {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Query phrase as whitespace-separated tokens.
        #[arg(long)]
        query: String,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Marker for user-input failures that should exit with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(anyhow::Error::new(UsageError(message.into())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenCorpus { out, size, seed } => commands::gen_corpus(&out, size, seed),
        Command::Train {
            data,
            out,
            seed,
            hidden,
            embed,
            epochs,
            patience,
            batch,
            lr,
            clip,
            embeddings,
        } => commands::train(
            &data,
            &out,
            commands::TrainArgs {
                seed,
                hidden,
                embed,
                epochs,
                patience,
                batch,
                lr,
                clip,
                embeddings,
            },
        ),
        Command::Attribute {
            model,
            sentence,
            data,
            method,
            span,
            ig_steps,
            render,
            out,
            seed: _,
        } => commands::attribute(&model, sentence, data, method, span, ig_steps, render, out),
        Command::Eval {
            model,
            data,
            out,
            method,
            ig_steps,
            seed,
        } => commands::eval(&model, &data, &out, method, ig_steps, seed),
        Command::Neighbors {
            model,
            data,
            query,
            k,
            seed: _,
        } => commands::neighbors(&model, &data, &query, k),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if err.downcast_ref::<UsageError>().is_some() {
                eprintln!("error: {err}");
                ExitCode::from(2)
            } else {
                eprintln!("internal error: {err:#}");
                ExitCode::FAILURE
            }
        }
    }
}

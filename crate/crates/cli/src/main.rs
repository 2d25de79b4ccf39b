mod commands;
mod server;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Span-preserving translation of SQuAD-format corpora, and the evaluation
/// tools around it.
#[derive(Debug, Parser)]
#[command(name = "eats", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan the segmentation of every context and count long paragraphs.
    Split {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
        /// Extra abbreviations, one per line.
        #[arg(long)]
        abbreviations: Option<PathBuf>,
    },
    /// Clean, anchor and segment every question; writes JSON Lines work items.
    Prepare {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
        #[arg(long)]
        abbreviations: Option<PathBuf>,
    },
    /// Translate a corpus, writing the corpus, a report and a discard log.
    Translate {
        input: PathBuf,
        output: PathBuf,
        /// Backend configuration (JSON).
        #[arg(long)]
        backend: PathBuf,
        /// Report path [default: <output>.report.json]
        #[arg(long)]
        report: Option<PathBuf>,
        /// Discard log path [default: <output>.discards.jsonl]
        #[arg(long)]
        discards: Option<PathBuf>,
        /// Directory for the translation cache.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value = "dev")]
        split: String,
        #[arg(long, default_value_t = 8)]
        parallelism: usize,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
        #[arg(long)]
        abbreviations: Option<PathBuf>,
    },
    /// Question and paragraph counts.
    Stats { corpus: PathBuf },
    /// Check that every answer span matches its context; exits 1 otherwise.
    Validate { corpus: PathBuf },
    /// Required sample size, and optionally a seeded draw from an id list.
    Sample {
        /// File with one item id per line.
        ids: Option<PathBuf>,
        /// Population size [default: number of ids]
        #[arg(long)]
        population: Option<usize>,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        #[arg(long, default_value_t = 0.03)]
        margin: f64,
        #[arg(long, default_value_t = 0.5)]
        proportion: f64,
        /// Draw this many ids instead of the computed size.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Preference percentages and Krippendorff's alpha over a votes file.
    Agreement { votes: PathBuf },
    /// Exact match and F1 of a predictions file against a corpus.
    Evaluate {
        predictions: PathBuf,
        corpus: PathBuf,
        #[arg(long, default_value = "urdu", value_parser = ["urdu", "english"])]
        profile: String,
    },
    /// Serve the blinded preference annotation API.
    ServeAnnotate {
        /// Task set (JSON); optional once the store exists.
        tasks: Option<PathBuf>,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with a built annotation frontend.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command, cli.json) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_named_path, SharedArgs};

/// Keyword extraction with TF-IDF tagset matching and expansion to k.
#[derive(Debug, Parser)]
#[command(name = "kwexpand", version)]
struct Cli {
    #[command(flatten)]
    shared: SharedArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print dataset statistics for the train and/or test split
    Stats,
    /// Build the document-frequency index and tagset snapshots into --out
    Build,
    /// Run a method over the test split and write keyword lists
    Extract {
        /// Components joined by `&`, e.g. `tntkid&bert&tfidf-tm`
        #[arg(long)]
        method: String,
        /// Prediction file of a file-backed component, as NAME=PATH
        #[arg(long = "pred", value_parser = parse_named_path)]
        predictions: Vec<(String, PathBuf)>,
        /// Split used for document frequencies (defaults to --train)
        #[arg(long)]
        df_from: Option<PathBuf>,
        /// Directory written by `build`; loads its snapshots instead of
        /// rebuilding them
        #[arg(long, conflicts_with = "df_from")]
        index: Option<PathBuf>,
    },
    /// Score one or more extraction outputs against the test split
    Evaluate {
        /// Extraction output to score, as NAME=PATH; repeat for more rows
        #[arg(long = "run", value_parser = parse_named_path, required = true)]
        runs: Vec<(String, PathBuf)>,
        /// Cutoffs, comma separated
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        /// Also write per-document scores as CSV (needs --out)
        #[arg(long)]
        per_doc: bool,
        /// Documents with missing predictions tolerated per run before
        /// exiting with status 2
        #[arg(long, default_value_t = 0)]
        max_missing: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = config::RunConfig::resolve(&cli.shared).and_then(|cfg| match cli.command {
        Command::Stats => commands::stats(&cfg),
        Command::Build => commands::build(&cfg),
        Command::Extract {
            method,
            predictions,
            df_from,
            index,
        } => commands::extract(
            &cfg,
            &method,
            &predictions,
            df_from.as_deref(),
            index.as_deref(),
        ),
        Command::Evaluate {
            runs,
            cutoffs,
            per_doc,
            max_missing,
        } => commands::evaluate(&cfg, &runs, cutoffs, per_doc, max_missing),
    });
    match result {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::Warnings) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

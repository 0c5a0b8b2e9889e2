//! `ontovec`: ingest ontologies, train embeddings, watch releases and serve
//! or query the versioned store.
//!
//! Exit codes: 0 on success, 1 for user errors (bad arguments, unknown
//! concepts, malformed input), 2 for internal failures.

mod commands;
mod output;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ontovec_core::ModelKind;

#[derive(Debug, Parser)]
#[command(
    name = "ontovec",
    version,
    about = "Versioned knowledge-graph embeddings for OBO ontologies"
)]
struct Cli {
    /// Embedding store directory; overrides the config's `store_path`.
    #[arg(long, global = true, env = "ONTOVEC_STORE")]
    store: Option<PathBuf>,
    /// Service configuration file (JSON).
    #[arg(long, global = true, env = "ONTOVEC_CONFIG")]
    config: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an OBO file and summarize the resulting graph.
    Ingest {
        obo: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        report: bool,
    },
    /// Retrain one model from the ontology stored with a version.
    Train(TrainArgs),
    /// Poll the configured sources and retrain on change.
    Watch {
        /// One immediate check of every source, then exit.
        #[arg(long)]
        once: bool,
    },
    /// Serve the REST API (and UI, if configured) while watching sources.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        /// Serve only; do not poll sources.
        #[arg(long)]
        no_watch: bool,
    },
    /// Similarity and nearest-neighbour queries against the store.
    #[command(subcommand)]
    Query(QueryCommand),
    /// Copy a published vectors.json.
    Export {
        kg: String,
        version: String,
        model: ModelKind,
        /// Output file, `-` for stdout.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    kg: String,
    /// Version tag or `latest`.
    version: String,
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Directory receiving vectors.json, prov.json and report.json.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct Target {
    kg: String,
    model: ModelKind,
    #[arg(long, default_value = "latest")]
    version: String,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum QueryCommand {
    /// Cosine similarity of two concepts (iri, label or alt_id).
    Sim {
        #[command(flatten)]
        target: Target,
        a: String,
        b: String,
    },
    /// The k concepts closest to a query concept.
    Closest {
        #[command(flatten)]
        target: Target,
        concept: String,
        #[arg(short, long, default_value_t = ontovec_core::query::DEFAULT_K)]
        k: usize,
        /// Restrict results to one namespace.
        #[arg(long)]
        namespace: Option<String>,
    },
}

fn init_tracing(verbose: u8, long_running: bool) {
    let default = match (verbose, long_running) {
        (0, false) => "warn",
        (0, true) | (1, _) => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_tracing(
        cli.verbose,
        matches!(cli.command, Command::Watch { .. } | Command::Serve { .. }),
    );
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

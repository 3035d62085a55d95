mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use codesight_core::ingestion::TOKEN_ENV_VAR;
use codesight_core::mining::ReportFormat;

/// Pull-request process mining and remaining-time dataset preparation for GitHub repositories.
#[derive(Debug, Parser)]
#[command(name = "codesight", version, about)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download pull requests, commits and workflow runs into a snapshot.
    Fetch {
        /// Repository as owner/name.
        #[arg(long)]
        repo: Option<String>,
        /// Only pull requests targeting this branch.
        #[arg(long)]
        branch: Option<String>,
        /// Snapshot file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replay a recorded fixture directory instead of calling the API.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Record every API exchange into this directory.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long, env = TOKEN_ENV_VAR, hide_env_values = true)]
        token: Option<String>,
        /// Override the snapshot's fetch time (RFC 3339), for reproducible replays.
        #[arg(long)]
        fetched_at: Option<String>,
    },
    /// Build the event log from a snapshot or a flat table with `Fch*` date columns.
    Transform {
        #[arg(long, conflicts_with = "table")]
        snapshot: Option<PathBuf>,
        /// Flat CSV table to melt instead of a snapshot.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Directory for events.csv, events.json and rejects.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyse an event log: variants, durations, transitions, rework and DORA metrics.
    Mine {
        /// events.json written by `transform`.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Snapshot supplying PR details and runs not linked to any PR.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Render a mined report.json in another format.
    Report {
        /// report.json written by `mine`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
    /// Truncate traces, split, preprocess and export the training dataset.
    Featurize {
        #[arg(long)]
        events: Option<PathBuf>,
        /// Snapshot supplying the PR details used for size labels.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Dataset directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic snapshot with a known remaining-time law.
    Synth {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Fraction of cases paced to meet their deadline.
        #[arg(long)]
        compliance: Option<f64>,
        /// Snapshot file to write; law.json is written beside it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use codesight_core::config::PipelineConfig;
use codesight_core::eventlog::{
    build_event_log, event_log_from_table, export_csv, save_rejects, unlinked_runs,
    ActivityTranslator, EventLog, FlatTable,
};
use codesight_core::features::{
    build_samples, export_dataset, split_dataset, DatasetMeta, EncodedDataset, SampleOptions,
};
use codesight_core::fsutil::write_atomic;
use codesight_core::ingestion::{
    load_snapshot, save_snapshot, FetchSnapshot, FixtureRecorder, FixtureTransport, GitHubClient,
    HttpTransport, RepoRef, Transport,
};
use codesight_core::mining::{
    build_report, build_traces, case_duration, emit_report, histogram_svg, DoraWindow,
    MiningReport, ReportFormat, ReportOptions,
};
use codesight_core::synth::{generate, SynthSpec};
use codesight_core::Timestamp;
use log::{info, warn};

use crate::error::CliError;
use crate::{Cli, Command};

pub const EVENTS_JSON: &str = "events.json";
pub const EVENTS_CSV: &str = "events.csv";
pub const REJECTS_JSONL: &str = "rejects.jsonl";
pub const REPORT_STEM: &str = "report";
pub const LAW_JSON: &str = "law.json";
pub const DURATION_HISTOGRAM: &str = "case_durations.svg";

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => {
            require(path)?;
            PipelineConfig::load(path)?
        }
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Fetch {
            repo,
            branch,
            out,
            fixture,
            record,
            token,
            fetched_at,
        } => {
            let slug = repo.or_else(|| config.repo.clone()).ok_or_else(|| {
                CliError::new(
                    "usage",
                    "no repository: pass --repo or set `repo` in the config",
                )
            })?;
            let repo = RepoRef::parse(&slug)
                .map_err(|e| CliError::new("usage", e.to_string()))?
                .with_branch(branch.or_else(|| config.branch.clone()));
            let token = token.or_else(|| std::env::var(&config.token_env).ok());
            let fetched_at = match fetched_at {
                Some(raw) => Timestamp::parse_rfc3339(&raw)
                    .map_err(|e| CliError::new("usage", e.to_string()))?,
                None => Timestamp::now(),
            };
            let out = out.unwrap_or_else(|| config.paths.snapshot.clone());
            let snapshot = match fixture {
                Some(dir) => fetch_with(
                    FixtureTransport::open(&dir)?,
                    record,
                    token,
                    &repo,
                    fetched_at,
                )?,
                None => {
                    if token.is_none() {
                        warn!("no API token; unauthenticated requests are heavily rate limited");
                    }
                    fetch_with(
                        HttpTransport::new(&config.api_url),
                        record,
                        token,
                        &repo,
                        fetched_at,
                    )?
                }
            };
            save_snapshot(&snapshot, &out)?;
            info!(
                "wrote {} ({} PRs, {} commits, {} runs)",
                out.display(),
                snapshot.pulls.len(),
                snapshot.commits.len(),
                snapshot.runs.len()
            );
            Ok(())
        }
        Command::Transform {
            snapshot,
            table,
            out,
        } => {
            let out = out.unwrap_or_else(|| config.paths.events.clone());
            let (log, rejects) = match table {
                Some(path) => {
                    require(&path)?;
                    let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
                    let table = FlatTable::from_csv_reader(file)?;
                    event_log_from_table(&table, &ActivityTranslator::default())?
                }
                None => {
                    let path = snapshot.unwrap_or_else(|| config.paths.snapshot.clone());
                    require(&path)?;
                    (build_event_log(&load_snapshot(&path)?)?, Vec::new())
                }
            };
            export_csv(&log, &out.join(EVENTS_CSV))?;
            write(&out.join(EVENTS_JSON), &log.to_json())?;
            let rejects_path = out.join(REJECTS_JSONL);
            save_rejects(&rejects, &rejects_path).map_err(|e| CliError::io(&rejects_path, e))?;
            info!(
                "{} events in {} cases, {} rejects",
                log.len(),
                log.n_cases(),
                rejects.len()
            );
            Ok(())
        }
        Command::Mine {
            events,
            snapshot,
            out,
            format,
        } => {
            let log =
                load_events(&events.unwrap_or_else(|| config.paths.events.join(EVENTS_JSON)))?;
            let snapshot = optional_snapshot(snapshot, &config)?;
            let (details, unlinked) = match &snapshot {
                Some(s) => (s.details.as_slice(), unlinked_runs(s)),
                None => (&[][..], Vec::new()),
            };
            let window = match (config.deploy.window_start, config.deploy.window_end) {
                (Some(a), Some(b)) => Some(
                    DoraWindow::new(a, b).map_err(|e| CliError::new("config", e.to_string()))?,
                ),
                _ => None,
            };
            let options = ReportOptions {
                window,
                deploy: config.deploy_filter()?,
                ..ReportOptions::default()
            };
            let report = build_report(&log, details, &unlinked, &options);
            let out = out.unwrap_or_else(|| config.paths.report.clone());
            let format = ReportFormat::from(format);
            let path = out.join(format!("{REPORT_STEM}.{}", format.extension()));
            emit_report(&report, &path, format).map_err(|e| CliError::io(&path, e))?;
            let durations: Vec<f64> = build_traces(&log)
                .iter()
                .filter(|t| t.is_completed())
                .map(|t| case_duration(t) as f64 / 3600.0)
                .collect();
            let svg = histogram_svg("Case duration (hours)", &durations, 20);
            write(&out.join(DURATION_HISTOGRAM), svg.as_bytes())?;
            info!("wrote {}", path.display());
            Ok(())
        }
        Command::Report { input, out, format } => {
            let input =
                input.unwrap_or_else(|| config.paths.report.join(format!("{REPORT_STEM}.json")));
            require(&input)?;
            let bytes = fs::read(&input).map_err(|e| CliError::io(&input, e))?;
            let report: MiningReport = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::new("report", format!("{}: {e}", input.display())))?;
            let format = ReportFormat::from(format);
            let out = out.unwrap_or_else(|| input.with_extension(format.extension()));
            emit_report(&report, &out, format).map_err(|e| CliError::io(&out, e))?;
            Ok(())
        }
        Command::Featurize {
            events,
            snapshot,
            out,
            seed,
        } => {
            let log =
                load_events(&events.unwrap_or_else(|| config.paths.events.join(EVENTS_JSON)))?;
            let snapshot_path = snapshot.unwrap_or_else(|| config.paths.snapshot.clone());
            require(&snapshot_path)?;
            let snapshot = load_snapshot(&snapshot_path)?;
            let seed = seed.unwrap_or(config.seed);
            let options = SampleOptions {
                seed,
                process: config.process.clone(),
                label_rule: config.labels.clone(),
                samples_per_trace: config.samples_per_trace,
                ..SampleOptions::default()
            };
            let set = build_samples(&build_traces(&log), &snapshot.details, &options)?;
            let split = split_dataset(&set.samples, config.split, seed)?;
            let dataset = EncodedDataset::build(&set, &split)?;
            let meta = DatasetMeta::new(&dataset, &set, seed);
            let out = out.unwrap_or_else(|| config.paths.dataset.clone());
            export_dataset(&dataset, &meta, &out)?;
            info!(
                "{} samples ({} train / {} val / {} test), max_len {}",
                set.samples.len(),
                meta.rows.train,
                meta.rows.val,
                meta.rows.test,
                meta.max_len
            );
            Ok(())
        }
        Command::Synth {
            cases,
            seed,
            compliance,
            out,
        } => {
            let defaults = SynthSpec::default();
            let spec = SynthSpec {
                n_cases: cases,
                seed: seed.unwrap_or(config.seed),
                compliance_target: compliance.unwrap_or(defaults.compliance_target),
                ..defaults
            };
            let (snapshot, law) = generate(&spec)?;
            let out = out.unwrap_or_else(|| config.paths.snapshot.clone());
            save_snapshot(&snapshot, &out)?;
            let law_path = out.parent().unwrap_or(Path::new(".")).join(LAW_JSON);
            write(&law_path, &law.to_json())?;
            info!("wrote {} and {}", out.display(), law_path.display());
            Ok(())
        }
    }
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::missing_input(path))
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

fn load_events(path: &Path) -> Result<EventLog, CliError> {
    require(path)?;
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(EventLog::from_json(&bytes)?)
}

/// An explicit `--snapshot` must exist; the configured default is used only when present.
fn optional_snapshot(
    flag: Option<PathBuf>,
    config: &PipelineConfig,
) -> Result<Option<FetchSnapshot>, CliError> {
    let path = match flag {
        Some(p) => {
            require(&p)?;
            p
        }
        None if config.paths.snapshot.is_file() => config.paths.snapshot.clone(),
        None => return Ok(None),
    };
    Ok(Some(load_snapshot(&path)?))
}

fn fetch_with<T: Transport>(
    transport: T,
    record: Option<PathBuf>,
    token: Option<String>,
    repo: &RepoRef,
    fetched_at: Timestamp,
) -> Result<FetchSnapshot, CliError> {
    match record {
        Some(dir) => {
            let recorder =
                FixtureRecorder::new(transport, &dir).map_err(|e| CliError::io(&dir, e))?;
            let client = GitHubClient::new(recorder, token);
            let result = client.fetch_snapshot(repo, fetched_at);
            client
                .transport()
                .finish()
                .map_err(|e| CliError::io(&dir, e))?;
            Ok(result?)
        }
        None => Ok(GitHubClient::new(transport, token).fetch_snapshot(repo, fetched_at)?),
    }
}

//! Versioned analysis report in JSON or markdown.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::activity::{
    development_indicators, pr_activity_report, temporal_evolution, user_activity,
    workflow_outcomes, DevelopmentIndicators, MonthlyActivity, PrActivityReport, UserActivity,
    WorkflowOutcomes,
};
use super::dora::{dora_metrics_with_unlinked, DeployFilter, DoraReport, DoraWindow};
use super::transitions::DEFAULT_BOTTLENECK_FACTOR;
use super::{
    bottlenecks, build_traces, detect_rework, discover_variants, summary, transition_stats,
    Bottleneck, ProcessSummary, Variant,
};
use crate::eventlog::{ActivityKind, EventLog};
use crate::fsutil::write_atomic;
use crate::ingestion::{RawPullRequestDetail, RawWorkflowRun};

pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// Section headings of the markdown rendering, in order.
pub const SECTION_HEADINGS: [&str; 7] = [
    "DORA Metrics",
    "General Development Indicators",
    "Pull Request Activity",
    "Process Variants and Visualization",
    "User-based Analysis",
    "Temporal Evolution of PRs",
    "Deployment and Incident Metrics",
];

/// Variants listed in the markdown rendering; JSON keeps all of them.
const MARKDOWN_VARIANTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!(
                "unknown report format {other:?} (expected json or markdown)"
            )),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub from: ActivityKind,
    pub to: ActivityKind,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReworkSummary {
    pub cases_with_rework: usize,
    /// Repeats summed over cases, per activity.
    pub repeats: BTreeMap<ActivityKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub schema_version: u64,
    pub summary: ProcessSummary,
    pub variants: Vec<Variant>,
    pub transitions: Vec<TransitionRow>,
    pub bottlenecks: Vec<Bottleneck>,
    pub rework: ReworkSummary,
    /// Absent when the log is empty and no window was given.
    pub dora: Option<DoraReport>,
    pub development: DevelopmentIndicators,
    pub pull_requests: PrActivityReport,
    pub users: BTreeMap<String, UserActivity>,
    pub monthly: BTreeMap<String, MonthlyActivity>,
    pub workflows: BTreeMap<String, WorkflowOutcomes>,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// Defaults to the span of the log.
    pub window: Option<DoraWindow>,
    pub deploy: DeployFilter,
    pub bottleneck_factor: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            window: None,
            deploy: DeployFilter::default(),
            bottleneck_factor: DEFAULT_BOTTLENECK_FACTOR,
        }
    }
}

pub fn build_report(
    log: &EventLog,
    details: &[RawPullRequestDetail],
    unlinked_runs: &[&RawWorkflowRun],
    options: &ReportOptions,
) -> MiningReport {
    let traces = build_traces(log);
    let stats = transition_stats(&traces);
    let mut rework = ReworkSummary {
        cases_with_rework: 0,
        repeats: BTreeMap::new(),
    };
    for t in &traces {
        let r = detect_rework(t);
        rework.cases_with_rework += usize::from(r.has_rework);
        for (a, n) in r.repeats {
            *rework.repeats.entry(a).or_insert(0) += n;
        }
    }
    let dora = options
        .window
        .or_else(|| DoraWindow::covering(log))
        .map(|w| dora_metrics_with_unlinked(log, unlinked_runs, w, &options.deploy));
    MiningReport {
        schema_version: REPORT_SCHEMA_VERSION,
        summary: summary(&traces),
        variants: discover_variants(&traces),
        bottlenecks: bottlenecks(&stats, options.bottleneck_factor),
        transitions: stats
            .into_iter()
            .map(|((from, to), s)| TransitionRow {
                from,
                to,
                count: s.count,
                mean: s.mean,
                median: s.median,
                max: s.max,
            })
            .collect(),
        rework,
        dora,
        development: development_indicators(&traces, details),
        pull_requests: pr_activity_report(&traces, details),
        users: user_activity(log),
        monthly: temporal_evolution(&traces),
        workflows: workflow_outcomes(log),
    }
}

pub fn render_json(report: &MiningReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serialization is infallible");
    bytes.push(b'\n');
    bytes
}

struct Secs(Option<f64>);

impl fmt::Display for Secs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(s) => write!(f, "{:.0} s ({:.2} h)", s, s / 3600.0),
            None => f.write_str("n/a"),
        }
    }
}

struct Ratio(Option<f64>);

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(r) => write!(f, "{:.3}", r),
            None => f.write_str("n/a"),
        }
    }
}

fn sequence(seq: &[ActivityKind]) -> String {
    seq.iter()
        .map(|a| a.as_str())
        .collect::<Vec<_>>()
        .join(" > ")
}

pub fn render_markdown(report: &MiningReport) -> String {
    let mut md = String::new();
    // Writing into a String cannot fail.
    let _ = write_markdown(&mut md, report);
    md
}

fn write_markdown(md: &mut String, r: &MiningReport) -> fmt::Result {
    let s = &r.summary;
    writeln!(md, "# Repository workflow report\n")?;
    writeln!(md, "- Cases: {}", s.n_cases)?;
    writeln!(md, "- Events: {}", s.n_events)?;
    writeln!(md, "- Variants: {}", s.n_variants)?;
    match s.time_range {
        Some((a, b)) => writeln!(md, "- Time range: {a} to {b}")?,
        None => writeln!(md, "- Time range: n/a")?,
    }
    writeln!(md)?;

    writeln!(md, "## {}\n", SECTION_HEADINGS[0])?;
    match &r.dora {
        Some(d) => {
            writeln!(
                md,
                "- Window: {} to {} ({:.2} weeks)",
                d.window.start,
                d.window.end,
                d.window.weeks()
            )?;
            writeln!(
                md,
                "- Deployments: {} ({} successful, {} failed)",
                d.deployments, d.successful_deployments, d.failed_deployments
            )?;
            writeln!(
                md,
                "- Deployment frequency: {:.3} per week",
                d.deployment_frequency
            )?;
            writeln!(
                md,
                "- Lead time for changes (median): {}",
                Secs(d.lead_time_for_changes)
            )?;
            writeln!(
                md,
                "- Lead time for changes (mean): {}",
                Secs(d.lead_time_mean)
            )?;
            writeln!(
                md,
                "- Change failure rate: {}",
                Ratio(d.change_failure_rate)
            )?;
            writeln!(md, "- Time to restore (median): {}", Secs(d.mttr))?;
            writeln!(md, "- Time to restore (mean): {}", Secs(d.mttr_mean))?;
        }
        None => writeln!(md, "No events, so no deployment window.")?,
    }
    writeln!(md)?;

    let d = &r.development;
    writeln!(md, "## {}\n", SECTION_HEADINGS[1])?;
    writeln!(md, "- Pull requests: {}", d.pull_requests)?;
    writeln!(md, "- Commits: {}", d.commits)?;
    writeln!(md, "- Workflow runs linked to PRs: {}", d.workflow_runs)?;
    writeln!(
        md,
        "- Commits per PR (mean): {}",
        Ratio(d.mean_commits_per_pr)
    )?;
    writeln!(
        md,
        "- Lines added / deleted: {} / {}",
        d.additions, d.deletions
    )?;
    writeln!(md, "- Files changed: {}", d.changed_files)?;
    if !d.target_branches.is_empty() {
        writeln!(md, "\n| Target branch | PRs |\n|---|---|")?;
        for (b, n) in &d.target_branches {
            writeln!(md, "| {b} | {n} |")?;
        }
    }
    if !d.filetypes.is_empty() {
        writeln!(md, "\n| File type | Commits |\n|---|---|")?;
        for (f, n) in &d.filetypes {
            writeln!(md, "| {f} | {n} |")?;
        }
    }
    writeln!(md)?;

    let p = &r.pull_requests;
    writeln!(md, "## {}\n", SECTION_HEADINGS[2])?;
    writeln!(md, "- Created: {}", p.prs_created)?;
    writeln!(md, "- Merged: {}", p.prs_merged)?;
    writeln!(md, "- Review time (mean): {}", Secs(p.mean_review_time))?;
    writeln!(md, "- Review time (median): {}", Secs(p.median_review_time))?;
    if !p.per_author.is_empty() {
        writeln!(
            md,
            "\n| Author | PRs | Merged | Mean lifetime |\n|---|---|---|---|"
        )?;
        for (a, x) in &p.per_author {
            writeln!(
                md,
                "| {a} | {} | {} | {} |",
                x.pr_count,
                x.merges,
                Secs(x.mean_lifetime)
            )?;
        }
    }
    if !p.merges_by_merger.is_empty() {
        writeln!(md, "\n| Merged by | Merges |\n|---|---|")?;
        for (m, n) in &p.merges_by_merger {
            writeln!(md, "| {m} | {n} |")?;
        }
    }
    writeln!(md)?;

    writeln!(md, "## {}\n", SECTION_HEADINGS[3])?;
    writeln!(md, "- Completed cases: {}", s.completed_cases)?;
    writeln!(md, "- Case duration (mean): {}", Secs(s.mean_case_duration))?;
    writeln!(
        md,
        "- Case duration (median): {}",
        Secs(s.median_case_duration)
    )?;
    writeln!(md, "- Open cases: {}", s.open_cases)?;
    writeln!(md, "- Open case age (mean): {}", Secs(s.open_mean_age))?;
    writeln!(md, "- Cases with rework: {}", r.rework.cases_with_rework)?;
    if !r.variants.is_empty() {
        writeln!(md, "\n| # | Cases | Sequence |\n|---|---|---|")?;
        for (i, v) in r.variants.iter().take(MARKDOWN_VARIANTS).enumerate() {
            writeln!(
                md,
                "| {} | {} | {} |",
                i + 1,
                v.case_count,
                sequence(&v.sequence)
            )?;
        }
        if r.variants.len() > MARKDOWN_VARIANTS {
            writeln!(
                md,
                "\n{} more variants in the JSON report.",
                r.variants.len() - MARKDOWN_VARIANTS
            )?;
        }
    }
    if !r.transitions.is_empty() {
        writeln!(
            md,
            "\n| From | To | Count | Mean | Median | Max |\n|---|---|---|---|---|---|"
        )?;
        for t in &r.transitions {
            writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                t.from,
                t.to,
                t.count,
                Secs(Some(t.mean)),
                Secs(Some(t.median)),
                Secs(Some(t.max as f64))
            )?;
        }
    }
    if !r.bottlenecks.is_empty() {
        writeln!(md, "\nSlow transitions:\n")?;
        for b in &r.bottlenecks {
            writeln!(
                md,
                "- {} > {}: mean {}, {:.1}x the overall mean",
                b.from,
                b.to,
                Secs(Some(b.mean)),
                b.ratio
            )?;
        }
    }
    writeln!(md)?;

    writeln!(md, "## {}\n", SECTION_HEADINGS[4])?;
    if r.users.is_empty() {
        writeln!(md, "No user activity.")?;
    } else {
        writeln!(
            md,
            "| User | PRs opened | Commits | Merges performed |\n|---|---|---|---|"
        )?;
        for (u, a) in &r.users {
            writeln!(
                md,
                "| {u} | {} | {} | {} |",
                a.prs_opened, a.commits, a.merges_performed
            )?;
        }
    }
    writeln!(md)?;

    writeln!(md, "## {}\n", SECTION_HEADINGS[5])?;
    if r.monthly.is_empty() {
        writeln!(md, "No dated events.")?;
    } else {
        writeln!(md, "| Month | Opened | Merged | Closed | Commits | Mean lifetime |\n|---|---|---|---|---|---|")?;
        for (m, a) in &r.monthly {
            writeln!(
                md,
                "| {m} | {} | {} | {} | {} | {} |",
                a.opened,
                a.merged,
                a.closed,
                a.commits,
                Secs(a.mean_lifetime)
            )?;
        }
    }
    writeln!(md)?;

    writeln!(md, "## {}\n", SECTION_HEADINGS[6])?;
    if let Some(d) = &r.dora {
        writeln!(md, "- Restored incidents: {}", d.restored_incidents)?;
        writeln!(md, "- Unresolved incidents: {}", d.unresolved_incidents)?;
    }
    if r.workflows.is_empty() {
        writeln!(md, "- No workflow runs.")?;
    } else {
        writeln!(
            md,
            "\n| Workflow | Runs | Failure rate | Conclusions |\n|---|---|---|---|"
        )?;
        for (w, o) in &r.workflows {
            let conclusions: Vec<String> = o
                .by_conclusion
                .iter()
                .map(|(c, n)| format!("{c}: {n}"))
                .collect();
            writeln!(
                md,
                "| {w} | {} | {} | {} |",
                o.runs,
                Ratio(o.failure_rate),
                conclusions.join(", ")
            )?;
        }
    }
    Ok(())
}

pub fn emit_report(
    report: &MiningReport,
    path: &Path,
    format: ReportFormat,
) -> std::io::Result<()> {
    let bytes = match format {
        ReportFormat::Json => render_json(report),
        ReportFormat::Markdown => render_markdown(report).into_bytes(),
    };
    write_atomic(path, &bytes)
}

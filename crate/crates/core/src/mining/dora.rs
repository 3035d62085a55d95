//! Deployment frequency, lead time for changes, change failure rate and time to restore.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::eventlog::{attr, ActivityKind, EventLog};
use crate::ingestion::RawWorkflowRun;
use crate::stats;
use crate::Timestamp;

const WEEK_SECONDS: f64 = 7.0 * 24.0 * 3600.0;

/// Conclusions counted as a failed deployment. Cancelled and skipped runs are ignored.
pub const FAILED_CONCLUSIONS: [&str; 3] = ["failure", "timed_out", "startup_failure"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoraWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("window start {start} is not before end {end}")]
pub struct EmptyWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl DoraWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, EmptyWindow> {
        if start < end {
            Ok(DoraWindow { start, end })
        } else {
            Err(EmptyWindow { start, end })
        }
    }

    /// Half-open: `start <= t < end`.
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn weeks(&self) -> f64 {
        self.start.seconds_until(self.end) as f64 / WEEK_SECONDS
    }

    /// Smallest window covering every event in the log, or `None` for an empty log.
    pub fn covering(log: &EventLog) -> Option<Self> {
        let start = log.events().iter().map(|e| e.date).min()?;
        let end = log.events().iter().map(|e| e.date).max()?;
        Some(DoraWindow {
            start,
            end: Timestamp(end.0 + 1),
        })
    }
}

/// Which workflow runs count as deployments.
#[derive(Debug, Clone)]
pub struct DeployFilter {
    pub run_name: Regex,
    pub event_trigger: Option<String>,
}

impl DeployFilter {
    pub const DEFAULT_PATTERN: &'static str = "(?i)deploy";

    pub fn new(pattern: &str, event_trigger: Option<String>) -> Result<Self, regex::Error> {
        Ok(DeployFilter {
            run_name: Regex::new(pattern)?,
            event_trigger,
        })
    }

    pub fn matches(&self, run_name: &str, event_trigger: Option<&str>) -> bool {
        self.run_name.is_match(run_name)
            && match &self.event_trigger {
                Some(want) => event_trigger == Some(want.as_str()),
                None => true,
            }
    }
}

impl Default for DeployFilter {
    fn default() -> Self {
        Self::new(Self::DEFAULT_PATTERN, None).expect("default pattern compiles")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoraReport {
    pub window: DoraWindow,
    /// Deploy runs with a success or failure outcome.
    pub deployments: usize,
    pub successful_deployments: usize,
    pub failed_deployments: usize,
    /// Deployments per week.
    pub deployment_frequency: f64,
    /// Median seconds from the earliest commit of a PR to its successful deployment.
    pub lead_time_for_changes: Option<f64>,
    pub lead_time_mean: Option<f64>,
    pub change_failure_rate: Option<f64>,
    /// Median seconds from the first failed deploy to the next successful one on the same workflow.
    pub mttr: Option<f64>,
    pub mttr_mean: Option<f64>,
    pub restored_incidents: usize,
    pub unresolved_incidents: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Failed,
}

#[derive(Debug, Clone)]
struct DeployAttempt {
    run_id: Option<u64>,
    run_name: String,
    at: Timestamp,
    outcome: Outcome,
    pr_id: Option<u64>,
}

fn outcome(conclusion: Option<&str>) -> Option<Outcome> {
    match conclusion? {
        "success" => Some(Outcome::Success),
        c if FAILED_CONCLUSIONS.contains(&c) => Some(Outcome::Failed),
        _ => None,
    }
}

fn linked_attempts(
    log: &EventLog,
    window: &DoraWindow,
    filter: &DeployFilter,
) -> Vec<DeployAttempt> {
    log.events()
        .iter()
        .filter(|e| e.activity == ActivityKind::WorkflowRun && window.contains(e.date))
        .filter_map(|e| {
            let run_name = e.attr(attr::RUN_NAME)?;
            if !filter.matches(run_name, e.attr(attr::EVENT_TRIGGER)) {
                return None;
            }
            Some(DeployAttempt {
                run_id: e.attr(attr::RUN_ID).and_then(|s| s.parse().ok()),
                run_name: run_name.to_string(),
                at: e.date,
                outcome: outcome(e.attr(attr::CONCLUSION))?,
                pr_id: Some(e.pr_id),
            })
        })
        .collect()
}

/// DORA metrics over the deploy runs linked to pull requests.
pub fn dora_metrics(log: &EventLog, window: DoraWindow, filter: &DeployFilter) -> DoraReport {
    dora_metrics_with_unlinked(log, &[], window, filter)
}

/// Like [`dora_metrics`], also counting runs that could not be linked to any pull request
/// (typically deploys triggered by a push to the default branch). Those contribute to
/// frequency, failure rate and restore time but not to lead time.
pub fn dora_metrics_with_unlinked(
    log: &EventLog,
    unlinked: &[&RawWorkflowRun],
    window: DoraWindow,
    filter: &DeployFilter,
) -> DoraReport {
    let mut attempts = linked_attempts(log, &window, filter);
    attempts.extend(unlinked.iter().filter_map(|run| {
        if !window.contains(run.run_started_at)
            || !filter.matches(&run.run_name, Some(&run.event_trigger))
        {
            return None;
        }
        Some(DeployAttempt {
            run_id: Some(run.run_id),
            run_name: run.run_name.clone(),
            at: run.run_started_at,
            outcome: outcome(run.conclusion.as_deref())?,
            pr_id: None,
        })
    }));
    attempts.sort_by_key(|a| (a.at, a.run_id, a.pr_id));
    let mut seen = BTreeSet::new();
    attempts.retain(|a| a.run_id.is_none_or(|id| seen.insert(id)));

    let successful = attempts
        .iter()
        .filter(|a| a.outcome == Outcome::Success)
        .count();
    let failed = attempts.len() - successful;
    let deployments = attempts.len();

    let mut report = DoraReport {
        window,
        deployments,
        successful_deployments: successful,
        failed_deployments: failed,
        deployment_frequency: deployments as f64 / window.weeks(),
        lead_time_for_changes: None,
        lead_time_mean: None,
        change_failure_rate: None,
        mttr: None,
        mttr_mean: None,
        restored_incidents: 0,
        unresolved_incidents: 0,
    };
    if deployments == 0 {
        return report;
    }
    report.change_failure_rate = Some(failed as f64 / deployments as f64);

    let first_commit: BTreeMap<u64, Timestamp> = log
        .cases()
        .filter_map(|(pr_id, events)| {
            let t = events
                .iter()
                .filter(|e| e.activity == ActivityKind::Commit)
                .map(|e| e.date)
                .min()?;
            Some((pr_id, t))
        })
        .collect();
    let lead_times: Vec<f64> = attempts
        .iter()
        .filter(|a| a.outcome == Outcome::Success)
        .filter_map(|a| {
            let commit = first_commit.get(&a.pr_id?)?;
            let gap = commit.seconds_until(a.at);
            (gap >= 0).then_some(gap as f64)
        })
        .collect();
    report.lead_time_for_changes = stats::median(&lead_times);
    report.lead_time_mean = stats::mean(&lead_times);

    let mut by_workflow: BTreeMap<&str, Vec<&DeployAttempt>> = BTreeMap::new();
    for a in &attempts {
        by_workflow.entry(a.run_name.as_str()).or_default().push(a);
    }
    let mut restores = Vec::new();
    for runs in by_workflow.values() {
        let mut failing_since: Option<Timestamp> = None;
        for a in runs {
            match (a.outcome, failing_since) {
                (Outcome::Failed, None) => failing_since = Some(a.at),
                (Outcome::Success, Some(since)) => {
                    restores.push(since.seconds_until(a.at) as f64);
                    failing_since = None;
                }
                _ => {}
            }
        }
        if failing_since.is_some() {
            report.unresolved_incidents += 1;
        }
    }
    report.restored_incidents = restores.len();
    report.mttr = stats::median(&restores);
    report.mttr_mean = stats::mean(&restores);
    report
}

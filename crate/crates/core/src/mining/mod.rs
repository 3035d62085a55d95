//! Trace reconstruction, variants, duration and transition statistics, rework, DORA metrics
//! and the analysis report.

pub mod activity;
pub mod dora;
mod plot;
pub mod report;
mod transitions;
mod variants;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eventlog::{attr, ActivityKind, EventLog};
use crate::stats;
use crate::Timestamp;

pub use activity::pr_activity_report;
pub use dora::{dora_metrics, dora_metrics_with_unlinked, DeployFilter, DoraReport, DoraWindow};
pub use plot::histogram_svg;
pub use report::{
    build_report, emit_report, render_json, render_markdown, MiningReport, ReportFormat,
    ReportOptions, REPORT_SCHEMA_VERSION, SECTION_HEADINGS,
};
pub use transitions::{
    bottlenecks, detect_rework, transition_stats, Bottleneck, Rework, TransitionStats,
    DEFAULT_BOTTLENECK_FACTOR,
};
pub use variants::{discover_variants, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub activity: ActivityKind,
    pub at: Timestamp,
    /// Extensions touched by a commit step; empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filetypes: Vec<String>,
}

/// Chronological activity sequence of one pull request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub pr_id: u64,
    pub steps: Vec<Step>,
    pub attributes: BTreeMap<String, String>,
}

/// Case-level attributes lifted from the first event that carries them.
const CASE_ATTRIBUTES: [&str; 5] = [
    attr::PR_NUMBER,
    attr::PR_AUTHOR,
    attr::FROM_BRANCH,
    attr::INTO_BRANCH,
    attr::STATE,
];

impl Trace {
    pub fn activities(&self) -> Vec<ActivityKind> {
        self.steps.iter().map(|s| s.activity).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start(&self) -> Option<Timestamp> {
        self.steps.first().map(|s| s.at)
    }

    pub fn end(&self) -> Option<Timestamp> {
        self.steps.last().map(|s| s.at)
    }

    /// Whether the PR was merged or closed. Deploy runs may still follow the merge.
    pub fn is_completed(&self) -> bool {
        self.steps.iter().any(|s| s.activity.is_terminal())
    }

    pub fn first_of(&self, activity: ActivityKind) -> Option<Timestamp> {
        self.steps
            .iter()
            .find(|s| s.activity == activity)
            .map(|s| s.at)
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }
}

/// One trace per case, steps in log order.
pub fn build_traces(log: &EventLog) -> Vec<Trace> {
    log.cases()
        .map(|(pr_id, events)| {
            let mut attributes = BTreeMap::new();
            for key in CASE_ATTRIBUTES {
                if let Some(v) = events.iter().find_map(|e| e.attr(key)) {
                    attributes.insert(key.to_string(), v.to_string());
                }
            }
            let steps = events
                .iter()
                .map(|e| Step {
                    activity: e.activity,
                    at: e.date,
                    filetypes: e
                        .attr(attr::FILETYPES)
                        .map(|f| {
                            f.split(attr::LIST_SEPARATOR)
                                .filter(|s| !s.is_empty())
                                .map(str::to_string)
                                .collect()
                        })
                        .unwrap_or_default(),
                })
                .collect();
            Trace {
                pr_id,
                steps,
                attributes,
            }
        })
        .collect()
}

/// Seconds between the first and last step.
pub fn case_duration(trace: &Trace) -> i64 {
    match (trace.start(), trace.end()) {
        (Some(a), Some(b)) => a.seconds_until(b),
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSummary {
    pub n_cases: usize,
    pub n_variants: usize,
    pub n_events: usize,
    pub time_range: Option<(Timestamp, Timestamp)>,
    /// Cases that reached a merge or closure.
    pub completed_cases: usize,
    /// Mean/median duration over completed cases, in seconds.
    pub mean_case_duration: Option<f64>,
    pub median_case_duration: Option<f64>,
    /// Still-open cases are reported apart: their age so far, not a duration.
    pub open_cases: usize,
    pub open_mean_age: Option<f64>,
    pub open_median_age: Option<f64>,
}

pub fn summary(traces: &[Trace]) -> ProcessSummary {
    let completed: Vec<f64> = traces
        .iter()
        .filter(|t| t.is_completed())
        .map(|t| case_duration(t) as f64)
        .collect();
    let open: Vec<f64> = traces
        .iter()
        .filter(|t| !t.is_completed())
        .map(|t| case_duration(t) as f64)
        .collect();
    let time_range = traces
        .iter()
        .filter_map(|t| Some((t.start()?, t.end()?)))
        .reduce(|(a0, a1), (b0, b1)| (a0.min(b0), a1.max(b1)));
    ProcessSummary {
        n_cases: traces.len(),
        n_variants: discover_variants(traces).len(),
        n_events: traces.iter().map(Trace::len).sum(),
        time_range,
        completed_cases: completed.len(),
        mean_case_duration: stats::mean(&completed),
        median_case_duration: stats::median(&completed),
        open_cases: open.len(),
        open_mean_age: stats::mean(&open),
        open_median_age: stats::median(&open),
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Trace;
use crate::eventlog::ActivityKind;
use crate::stats;

/// Directly-follows gap statistics, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: i64,
}

pub fn transition_stats(
    traces: &[Trace],
) -> BTreeMap<(ActivityKind, ActivityKind), TransitionStats> {
    let mut gaps: BTreeMap<(ActivityKind, ActivityKind), Vec<i64>> = BTreeMap::new();
    for t in traces {
        for w in t.steps.windows(2) {
            gaps.entry((w[0].activity, w[1].activity))
                .or_default()
                .push(w[0].at.seconds_until(w[1].at));
        }
    }
    gaps.into_iter()
        .map(|(pair, g)| {
            let as_f64: Vec<f64> = g.iter().map(|&x| x as f64).collect();
            let stats = TransitionStats {
                count: g.len(),
                mean: stats::mean(&as_f64).unwrap_or(0.0),
                median: stats::median(&as_f64).unwrap_or(0.0),
                max: g.iter().copied().max().unwrap_or(0),
            };
            (pair, stats)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub from: ActivityKind,
    pub to: ActivityKind,
    pub mean: f64,
    /// `mean` divided by the mean over all transitions.
    pub ratio: f64,
}

pub const DEFAULT_BOTTLENECK_FACTOR: f64 = 3.0;

/// Transitions whose mean gap exceeds `factor` times the mean gap over every transition.
/// Sorted by ratio, largest first.
pub fn bottlenecks(
    stats: &BTreeMap<(ActivityKind, ActivityKind), TransitionStats>,
    factor: f64,
) -> Vec<Bottleneck> {
    let total: f64 = stats.values().map(|s| s.mean * s.count as f64).sum();
    let n: usize = stats.values().map(|s| s.count).sum();
    if n == 0 {
        return Vec::new();
    }
    let global = total / n as f64;
    if global <= 0.0 {
        return Vec::new();
    }
    let mut out: Vec<Bottleneck> = stats
        .iter()
        .filter(|(_, s)| s.mean > factor * global)
        .map(|(&(from, to), s)| Bottleneck {
            from,
            to,
            mean: s.mean,
            ratio: s.mean / global,
        })
        .collect();
    out.sort_by(|a, b| {
        b.ratio
            .total_cmp(&a.ratio)
            .then((a.from, a.to).cmp(&(b.from, b.to)))
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rework {
    /// Occurrences minus one, for every activity seen at least twice.
    pub repeats: BTreeMap<ActivityKind, usize>,
    pub has_rework: bool,
}

/// Repeated commits are ordinary authoring and do not set `has_rework`; any other repeat does.
pub fn detect_rework(trace: &Trace) -> Rework {
    let mut counts: BTreeMap<ActivityKind, usize> = BTreeMap::new();
    for s in &trace.steps {
        *counts.entry(s.activity).or_default() += 1;
    }
    let repeats: BTreeMap<ActivityKind, usize> = counts
        .into_iter()
        .filter(|&(_, c)| c >= 2)
        .map(|(a, c)| (a, c - 1))
        .collect();
    let has_rework = repeats.keys().any(|&a| a != ActivityKind::Commit);
    Rework {
        repeats,
        has_rework,
    }
}

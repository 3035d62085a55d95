use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    calendar_features, classify_branch, prefix_filetypes, transition_seconds, ActivityVocab,
    Calendar, ComplexityLabel, FeatureError, LabelRule, FROM_BRANCH_TOKENS, INTO_BRANCH_TOKENS,
};
use crate::eventlog::attr;
use crate::ingestion::RawPullRequestDetail;
use crate::mining::Trace;

/// A trace split at `cut`: the first `cut` steps are observed, the rest are the future.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub cut: usize,
    pub truncated_activity_list: Vec<u32>,
    pub remaining_activity_list: Vec<u32>,
    pub truncated_transitions: Vec<i64>,
    pub remaining_transitions: Vec<i64>,
    /// Seconds from the first step to the last observed step.
    pub elapsed_time: i64,
    /// Seconds from the last observed step to the last step.
    pub remaining_time: i64,
    /// ID of the last observed activity.
    pub activity: u32,
    pub prefix_len: usize,
    /// Mean of `truncated_transitions`; 0 when the prefix is a single step.
    pub trunc_dt_mean: f64,
}

/// Cuts `trace` at a position drawn uniformly from `1..len`.
pub fn truncate_trace<R: Rng + ?Sized>(
    trace: &Trace,
    vocab: &ActivityVocab,
    rng: &mut R,
) -> Result<Truncation, FeatureError> {
    let len = trace.len();
    if len < 2 {
        return Err(FeatureError::TraceTooShort {
            pr_id: trace.pr_id,
            len,
        });
    }
    let cut = rng.random_range(1..len);
    truncate_at(trace, vocab, cut)
}

/// Deterministic form of [`truncate_trace`]; `cut` must lie in `1..len`.
pub fn truncate_at(
    trace: &Trace,
    vocab: &ActivityVocab,
    cut: usize,
) -> Result<Truncation, FeatureError> {
    let len = trace.len();
    if len < 2 || cut == 0 || cut >= len {
        return Err(FeatureError::TraceTooShort {
            pr_id: trace.pr_id,
            len,
        });
    }
    let ids = vocab.encode(&trace.activities())?;
    let mut gaps = transition_seconds(trace);
    let remaining_transitions = gaps.split_off(cut - 1);
    let truncated_transitions = gaps;
    let elapsed_time = trace.steps[0].at.seconds_until(trace.steps[cut - 1].at);
    let remaining_time = trace.steps[cut - 1]
        .at
        .seconds_until(trace.steps[len - 1].at);
    let trunc_dt_mean = if truncated_transitions.is_empty() {
        0.0
    } else {
        truncated_transitions.iter().sum::<i64>() as f64 / truncated_transitions.len() as f64
    };
    Ok(Truncation {
        cut,
        activity: ids[cut - 1],
        truncated_activity_list: ids[..cut].to_vec(),
        remaining_activity_list: ids[cut..].to_vec(),
        truncated_transitions,
        remaining_transitions,
        elapsed_time,
        remaining_time,
        prefix_len: cut,
        trunc_dt_mean,
    })
}

/// Model inputs computed from the observed prefix and case-level attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticFeatures {
    pub from_branch_type: String,
    pub into_branch_type: String,
    pub process: String,
    /// Calendar parts of the last observed step.
    pub calendar: Calendar,
    /// Name of the last observed activity.
    pub activity: String,
    /// Extensions touched by observed commits.
    pub filetypes: BTreeSet<String>,
    pub elapsed_time: f64,
    pub prefix_len: f64,
    pub trunc_dt_mean: f64,
    pub no_transitions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixSample {
    pub pr_id: u64,
    pub truncation: Truncation,
    pub static_features: StaticFeatures,
    pub label: ComplexityLabel,
}

impl PrefixSample {
    pub fn deadline_seconds(&self) -> i64 {
        self.label.deadline_seconds()
    }
}

#[derive(Debug, Clone)]
pub struct SampleOptions {
    pub seed: u64,
    /// Value of the `process` column, e.g. `backend` or `frontend`.
    pub process: String,
    pub label_rule: LabelRule,
    /// Independent cuts drawn per trace.
    pub samples_per_trace: usize,
    pub from_tokens: Vec<String>,
    pub into_tokens: Vec<String>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            seed: 0,
            process: "backend".into(),
            label_rule: LabelRule::default(),
            samples_per_trace: 1,
            from_tokens: FROM_BRANCH_TOKENS.iter().map(|s| s.to_string()).collect(),
            into_tokens: INTO_BRANCH_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub vocab: ActivityVocab,
    pub samples: Vec<PrefixSample>,
    /// Traces with a single event.
    pub skipped_short: usize,
    /// Traces with no merge or closure; their remaining time is unknown.
    pub skipped_open: usize,
    /// Traces whose PR has no detail record to derive a size label from.
    pub skipped_no_detail: usize,
}

fn tokens(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn static_features(
    trace: &Trace,
    t: &Truncation,
    vocab: &ActivityVocab,
    options: &SampleOptions,
) -> StaticFeatures {
    let prefix = &trace.steps[..t.cut];
    StaticFeatures {
        from_branch_type: classify_branch(
            trace.attr(attr::FROM_BRANCH).unwrap_or(""),
            &tokens(&options.from_tokens),
        ),
        into_branch_type: classify_branch(
            trace.attr(attr::INTO_BRANCH).unwrap_or(""),
            &tokens(&options.into_tokens),
        ),
        process: options.process.clone(),
        calendar: calendar_features(prefix[t.cut - 1].at),
        activity: vocab.name(t.activity).unwrap_or_default().to_string(),
        filetypes: prefix_filetypes(prefix),
        elapsed_time: t.elapsed_time as f64,
        prefix_len: t.prefix_len as f64,
        trunc_dt_mean: t.trunc_dt_mean,
        no_transitions: t.truncated_transitions.is_empty(),
    }
}

/// One seeded truncation per completed trace (or `samples_per_trace`), in trace order.
///
/// The vocabulary covers every trace passed in, so it must be built before splitting.
pub fn build_samples(
    traces: &[Trace],
    details: &[RawPullRequestDetail],
    options: &SampleOptions,
) -> Result<SampleSet, FeatureError> {
    let vocab = ActivityVocab::from_traces(traces);
    let by_number: BTreeMap<u64, &RawPullRequestDetail> =
        details.iter().map(|d| (d.pr_number, d)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut set = SampleSet {
        vocab,
        samples: Vec::new(),
        skipped_short: 0,
        skipped_open: 0,
        skipped_no_detail: 0,
    };
    for trace in traces {
        if trace.len() < 2 {
            set.skipped_short += 1;
            continue;
        }
        if !trace.is_completed() {
            set.skipped_open += 1;
            continue;
        }
        let detail = trace
            .attr(attr::PR_NUMBER)
            .and_then(|n| n.parse::<u64>().ok())
            .and_then(|n| by_number.get(&n));
        let Some(detail) = detail else {
            set.skipped_no_detail += 1;
            continue;
        };
        let label = options.label_rule.label(detail);
        for _ in 0..options.samples_per_trace.max(1) {
            let t = truncate_trace(trace, &set.vocab, &mut rng)?;
            let static_features = static_features(trace, &t, &set.vocab, options);
            set.samples.push(PrefixSample {
                pr_id: trace.pr_id,
                truncation: t,
                static_features,
                label,
            });
        }
    }
    Ok(set)
}

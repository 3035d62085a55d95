//! Prefix-truncated training samples: labelling, truncation, splitting, preprocessing,
//! padding and dataset export.

mod export;
mod preprocess;
mod sample;
mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::eventlog::ActivityKind;
use crate::ingestion::RawPullRequestDetail;
use crate::mining::{Step, Trace};
use crate::Timestamp;

pub use export::{
    export_dataset, load_meta, meta_from_json, DatasetMeta, ExportError, SkipCounts, SplitCounts,
    DATASET_SCHEMA_VERSION, SPLIT_NAMES, TARGET_HEADER,
};
pub use preprocess::{
    apply_preprocess, encode_split, fit_preprocess, pad_sequences, standardize_durations,
    CategoricalColumn, DtParams, EncodedDataset, EncodedSplit, NumericColumn, PreprocessParams,
    BINARY_COLUMNS, CATEGORICAL_COLUMNS, NUMERIC_COLUMNS, PADDING_PERCENTILE, UNKNOWN_CATEGORY,
};
pub use sample::{
    build_samples, truncate_at, truncate_trace, PrefixSample, SampleOptions, SampleSet,
    StaticFeatures, Truncation,
};
pub use split::{split_dataset, split_sizes, BadFractions, Split, SplitFractions};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("activity {0:?} is not in the vocabulary")]
    UnseenActivity(String),
    #[error("remaining time must be non-negative, got {0}")]
    NegativeTarget(f64),
    #[error("trace {pr_id} has {len} events; truncation needs at least 2")]
    TraceTooShort { pr_id: u64, len: usize },
    #[error("cannot fit preprocessing on an empty training split")]
    EmptyTrain,
    #[error("split needs at least 3 cases, got {0}")]
    TooFewCases(usize),
    #[error("feature {0:?} reveals post-cut information and may not be a model input")]
    Leakage(String),
}

/// PR size class, which fixes the resolution deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComplexityLabel {
    S,
    M,
    L,
    XL,
}

impl ComplexityLabel {
    pub const ALL: [ComplexityLabel; 4] = [Self::S, Self::M, Self::L, Self::XL];

    pub fn deadline_hours(self) -> u32 {
        match self {
            Self::S => 8,
            Self::M => 24,
            Self::L => 48,
            Self::XL => 72,
        }
    }

    pub fn deadline_seconds(self) -> i64 {
        i64::from(self.deadline_hours()) * 3600
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::S => "S",
            Self::M => "M",
            Self::L => "L",
            Self::XL => "XL",
        }
    }
}

impl fmt::Display for ComplexityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Upper bounds (inclusive) on changed files and changed lines for one size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeBound {
    pub files: u64,
    pub lines: u64,
}

/// Size rule: an explicit `size/<label>` PR label wins, otherwise the first class whose
/// bounds hold for changed files and additions+deletions; XL when none does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelRule {
    pub small: SizeBound,
    pub medium: SizeBound,
    pub large: SizeBound,
}

impl Default for LabelRule {
    fn default() -> Self {
        LabelRule {
            small: SizeBound {
                files: 2,
                lines: 50,
            },
            medium: SizeBound {
                files: 5,
                lines: 200,
            },
            large: SizeBound {
                files: 15,
                lines: 1000,
            },
        }
    }
}

impl LabelRule {
    pub fn label(&self, detail: &RawPullRequestDetail) -> ComplexityLabel {
        for l in &detail.labels {
            let Some(size) = l
                .to_ascii_lowercase()
                .strip_prefix("size/")
                .map(str::to_string)
            else {
                continue;
            };
            if let Some(label) = ComplexityLabel::ALL
                .into_iter()
                .find(|c| c.as_str().eq_ignore_ascii_case(&size))
            {
                return label;
            }
        }
        let files = detail.changed_files;
        let lines = detail.additions + detail.deletions;
        let fits = |b: SizeBound| files <= b.files && lines <= b.lines;
        if fits(self.small) {
            ComplexityLabel::S
        } else if fits(self.medium) {
            ComplexityLabel::M
        } else if fits(self.large) {
            ComplexityLabel::L
        } else {
            ComplexityLabel::XL
        }
    }
}

/// Label and deadline in hours for a PR.
pub fn assign_label_and_deadline(
    detail: &RawPullRequestDetail,
    rule: &LabelRule,
) -> (ComplexityLabel, u32) {
    let label = rule.label(detail);
    (label, label.deadline_hours())
}

pub const OTHER_BRANCH: &str = "other";
pub const FROM_BRANCH_TOKENS: [&str; 4] = ["hotfix", "fix", "bug", "feature"];
pub const INTO_BRANCH_TOKENS: [&str; 6] =
    ["feature", "develop", "release", "staging", "main", "master"];

/// Case-insensitive keyword match: the branch name is split on non-alphanumeric characters and
/// the first token (in `tokens` order) that starts any segment wins; `other` when none does.
pub fn classify_branch(branch: &str, tokens: &[&str]) -> String {
    let lower = branch.to_lowercase();
    let segments: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect();
    tokens
        .iter()
        .find(|t| segments.iter().any(|s| s.starts_with(&t.to_lowercase())))
        .map(|t| t.to_lowercase())
        .unwrap_or_else(|| OTHER_BRANCH.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub year: i32,
    pub month: u32,
    pub day: u32,
    /// 0 = Monday.
    pub weekday: u32,
    pub is_weekend: bool,
}

/// Calendar parts of a UTC instant.
pub fn calendar_features(at: Timestamp) -> Calendar {
    let dt = at.to_datetime();
    let weekday = dt.weekday().num_days_from_monday();
    Calendar {
        year: dt.year(),
        month: dt.month(),
        day: dt.day(),
        weekday,
        is_weekend: weekday >= 5,
    }
}

/// Gaps in seconds between consecutive steps.
pub fn transition_seconds(trace: &Trace) -> Vec<i64> {
    trace
        .steps
        .windows(2)
        .map(|w| w[0].at.seconds_until(w[1].at))
        .collect()
}

/// Extensions touched by the commit steps given.
pub fn prefix_filetypes(prefix: &[Step]) -> BTreeSet<String> {
    prefix
        .iter()
        .filter(|s| s.activity == ActivityKind::Commit)
        .flat_map(|s| s.filetypes.iter().cloned())
        .collect()
}

/// `has_<ext>` flags over a fixed extension universe, from prefix commits only.
pub fn filetype_flags(prefix: &[Step], universe: &[String]) -> BTreeMap<String, bool> {
    let seen = prefix_filetypes(prefix);
    universe
        .iter()
        .map(|ext| (format!("has_{ext}"), seen.contains(ext)))
        .collect()
}

/// Activity name to dense ID; 0 is the padding ID and never assigned.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityVocab {
    ids: BTreeMap<String, u32>,
}

impl ActivityVocab {
    pub const PADDING_ID: u32 = 0;

    /// IDs 1..=K in sorted name order.
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let sorted: BTreeSet<&str> = names.into_iter().collect();
        ActivityVocab {
            ids: sorted
                .into_iter()
                .zip(1..)
                .map(|(n, i)| (n.to_string(), i))
                .collect(),
        }
    }

    /// Vocabulary over every activity occurring in `traces`.
    pub fn from_traces(traces: &[Trace]) -> Self {
        Self::from_names(
            traces
                .iter()
                .flat_map(|t| t.steps.iter().map(|s| s.activity.as_str())),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<u32, FeatureError> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| FeatureError::UnseenActivity(name.to_string()))
    }

    pub fn encode(&self, activities: &[ActivityKind]) -> Result<Vec<u32>, FeatureError> {
        activities.iter().map(|a| self.id(a.as_str())).collect()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.ids
            .iter()
            .find(|(_, &v)| v == id)
            .map(|(k, _)| k.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u32)> {
        self.ids.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Sample fields that carry information from after the cut. None of them may be a model input.
pub const LEAKY_FEATURES: [&str; 4] = [
    "remaining_activity_list",
    "remaining_transitions",
    "remaining_time",
    "trace_total_duration",
];

/// Drops every field on the exclusion list, keeping order.
pub fn drop_leaky_features<'a>(fields: &[&'a str]) -> Vec<&'a str> {
    fields
        .iter()
        .copied()
        .filter(|f| !LEAKY_FEATURES.contains(f))
        .collect()
}

/// Fails if any model input column is on the exclusion list.
pub fn audit_inputs<S: AsRef<str>>(columns: &[S]) -> Result<(), FeatureError> {
    match columns
        .iter()
        .find(|c| LEAKY_FEATURES.contains(&c.as_ref()))
    {
        Some(c) => Err(FeatureError::Leakage(c.as_ref().to_string())),
        None => Ok(()),
    }
}

pub fn target_log(remaining_seconds: f64) -> Result<f64, FeatureError> {
    if remaining_seconds < 0.0 || remaining_seconds.is_nan() {
        return Err(FeatureError::NegativeTarget(remaining_seconds));
    }
    Ok(remaining_seconds.ln_1p())
}

pub fn target_seconds(y_log: f64) -> f64 {
    y_log.exp_m1()
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    audit_inputs, target_log, ActivityVocab, FeatureError, PrefixSample, SampleSet, Split,
};
use crate::stats;

pub const NUMERIC_COLUMNS: [&str; 3] = ["elapsed_time", "prefix_len", "trunc_dt_mean"];
/// Fixed binary columns; one `has_<ext>` column per training extension follows them.
pub const BINARY_COLUMNS: [&str; 2] = ["is_weekend", "no_transitions"];
pub const CATEGORICAL_COLUMNS: [&str; 8] = [
    "from_branch_type",
    "into_branch_type",
    "process",
    "year",
    "month",
    "day",
    "weekday",
    "activity",
];
/// One-hot slot for categories not seen in training.
pub const UNKNOWN_CATEGORY: &str = "<unknown>";
/// Sequence length is this nearest-rank percentile of training prefix lengths.
pub const PADDING_PERCENTILE: f64 = 95.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericColumn {
    pub name: String,
    /// Imputation value for missing entries.
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
    /// No training value was present; imputes 0.
    pub all_missing: bool,
    /// Training sd was 0 and was replaced by 1.
    pub sd_guarded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub name: String,
    /// Training categories in sorted order; the unknown slot comes after them.
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtParams {
    /// Mean and sd of log1p(gap) over real (non-padding) training positions.
    pub mu: f64,
    pub sd: f64,
    pub sd_guarded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub numeric: Vec<NumericColumn>,
    /// Extension universe for the `has_<ext>` columns.
    pub filetypes: Vec<String>,
    pub categorical: Vec<CategoricalColumn>,
    pub dt: DtParams,
    pub max_len: usize,
    pub vocab: ActivityVocab,
}

fn numeric_values(s: &PrefixSample) -> [Option<f64>; 3] {
    let f = &s.static_features;
    [
        Some(f.elapsed_time),
        Some(f.prefix_len),
        Some(f.trunc_dt_mean),
    ]
}

fn binary_values(s: &PrefixSample) -> [bool; 2] {
    let f = &s.static_features;
    [f.calendar.is_weekend, f.no_transitions]
}

fn categorical_values(s: &PrefixSample) -> [String; 8] {
    let f = &s.static_features;
    [
        f.from_branch_type.clone(),
        f.into_branch_type.clone(),
        f.process.clone(),
        f.calendar.year.to_string(),
        f.calendar.month.to_string(),
        f.calendar.day.to_string(),
        f.calendar.weekday.to_string(),
        f.activity.clone(),
    ]
}

/// Mean and population sd, with sd replaced by 1 when it is zero (or there is no data).
fn moments(values: &[f64]) -> (f64, f64, bool) {
    let mean = stats::mean(values).unwrap_or(0.0);
    match stats::population_sd(values) {
        Some(sd) if sd > 0.0 => (mean, sd, false),
        _ => (mean, 1.0, true),
    }
}

impl PreprocessParams {
    /// Column names of the static matrix, in order.
    pub fn static_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.numeric.iter().map(|c| c.name.clone()).collect();
        cols.extend(BINARY_COLUMNS.iter().map(|s| s.to_string()));
        cols.extend(self.filetypes.iter().map(|e| format!("has_{e}")));
        for c in &self.categorical {
            cols.extend(c.categories.iter().map(|v| format!("{}={v}", c.name)));
            cols.push(format!("{}={UNKNOWN_CATEGORY}", c.name));
        }
        cols
    }
}

/// Sequences cut to their last `max_len` entries and right-padded: activity IDs with 0,
/// raw gaps with 0. The gap row starts with a 0 for the first step. Also returns the true
/// (unpadded, post-cut) length of each row.
pub fn pad_sequences(
    samples: &[&PrefixSample],
    max_len: usize,
) -> (Vec<Vec<u32>>, Vec<Vec<f64>>, Vec<usize>) {
    let mut seq = Vec::with_capacity(samples.len());
    let mut dt = Vec::with_capacity(samples.len());
    let mut lengths = Vec::with_capacity(samples.len());
    for s in samples {
        let t = &s.truncation;
        let ids = &t.truncated_activity_list;
        let gaps: Vec<f64> = std::iter::once(0.0)
            .chain(t.truncated_transitions.iter().map(|&g| g as f64))
            .collect();
        debug_assert_eq!(ids.len(), gaps.len());
        let start = ids.len().saturating_sub(max_len);
        let mut row: Vec<u32> = ids[start..].to_vec();
        let mut gap_row: Vec<f64> = gaps[start..].to_vec();
        lengths.push(row.len());
        row.resize(max_len, ActivityVocab::PADDING_ID);
        gap_row.resize(max_len, 0.0);
        seq.push(row);
        dt.push(gap_row);
    }
    (seq, dt, lengths)
}

fn fit_dt(raw: &[Vec<f64>], lengths: &[usize]) -> DtParams {
    let values: Vec<f64> = raw
        .iter()
        .zip(lengths)
        .flat_map(|(row, &n)| row[..n].iter().map(|g| g.ln_1p()))
        .collect();
    let (mu, sd, sd_guarded) = moments(&values);
    DtParams { mu, sd, sd_guarded }
}

/// `(log1p(gap) − mu) / sd` at every position; padding positions get the image of 0.
pub fn standardize_durations(raw: &[Vec<f64>], params: &DtParams) -> Vec<Vec<f64>> {
    raw.iter()
        .map(|row| {
            row.iter()
                .map(|g| (g.ln_1p() - params.mu) / params.sd)
                .collect()
        })
        .collect()
}

/// Fits imputation, scaling, one-hot layout, sequence length and gap scaling on training
/// samples only.
pub fn fit_preprocess(
    train: &[&PrefixSample],
    vocab: &ActivityVocab,
) -> Result<PreprocessParams, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::EmptyTrain);
    }
    let numeric = NUMERIC_COLUMNS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let present: Vec<f64> = train.iter().filter_map(|s| numeric_values(s)[i]).collect();
            let all_missing = present.is_empty();
            let median = stats::median(&present).unwrap_or(0.0);
            let imputed: Vec<f64> = train
                .iter()
                .map(|s| numeric_values(s)[i].unwrap_or(median))
                .collect();
            let (mean, sd, sd_guarded) = moments(&imputed);
            NumericColumn {
                name: name.to_string(),
                median,
                mean,
                sd,
                all_missing,
                sd_guarded,
            }
        })
        .collect();
    let filetypes: BTreeSet<String> = train
        .iter()
        .flat_map(|s| s.static_features.filetypes.iter().cloned())
        .collect();
    let categorical = CATEGORICAL_COLUMNS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: BTreeSet<String> = train
                .iter()
                .map(|s| categorical_values(s)[i].clone())
                .collect();
            CategoricalColumn {
                name: name.to_string(),
                categories: values.into_iter().collect(),
            }
        })
        .collect();
    let lengths: Vec<usize> = train.iter().map(|s| s.truncation.prefix_len).collect();
    let max_len = stats::nearest_rank_percentile(&lengths, PADDING_PERCENTILE)
        .unwrap_or(1)
        .max(1);
    let (_, raw_dt, real) = pad_sequences(train, max_len);
    let params = PreprocessParams {
        numeric,
        filetypes: filetypes.into_iter().collect(),
        categorical,
        dt: fit_dt(&raw_dt, &real),
        max_len,
        vocab: vocab.clone(),
    };
    audit_inputs(&params.static_columns())?;
    Ok(params)
}

/// Static matrix rows with the fitted parameters; nothing is refitted.
pub fn apply_preprocess(params: &PreprocessParams, samples: &[&PrefixSample]) -> Vec<Vec<f64>> {
    let width = params.static_columns().len();
    samples
        .iter()
        .map(|s| {
            let mut row = Vec::with_capacity(width);
            for (col, v) in params.numeric.iter().zip(numeric_values(s)) {
                row.push((v.unwrap_or(col.median) - col.mean) / col.sd);
            }
            row.extend(binary_values(s).iter().map(|&b| f64::from(u8::from(b))));
            row.extend(
                params
                    .filetypes
                    .iter()
                    .map(|e| f64::from(u8::from(s.static_features.filetypes.contains(e)))),
            );
            for (col, v) in params.categorical.iter().zip(categorical_values(s)) {
                let hit = col.categories.binary_search(&v).ok();
                row.extend((0..col.categories.len()).map(|i| f64::from(u8::from(hit == Some(i)))));
                row.push(f64::from(u8::from(hit.is_none())));
            }
            row
        })
        .collect()
}

/// Model-ready arrays for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedSplit {
    pub pr_ids: Vec<u64>,
    pub seq: Vec<Vec<u32>>,
    pub dt: Vec<Vec<f64>>,
    /// Unpadded length of each sequence row.
    pub lengths: Vec<usize>,
    pub static_matrix: Vec<Vec<f64>>,
    pub y_log: Vec<f64>,
    pub y_seconds: Vec<f64>,
    pub deadline_seconds: Vec<f64>,
    pub elapsed_seconds: Vec<f64>,
}

impl EncodedSplit {
    pub fn len(&self) -> usize {
        self.pr_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pr_ids.is_empty()
    }
}

pub fn encode_split(
    params: &PreprocessParams,
    samples: &[&PrefixSample],
) -> Result<EncodedSplit, FeatureError> {
    let (seq, raw_dt, lengths) = pad_sequences(samples, params.max_len);
    let y_seconds: Vec<f64> = samples
        .iter()
        .map(|s| s.truncation.remaining_time as f64)
        .collect();
    Ok(EncodedSplit {
        pr_ids: samples.iter().map(|s| s.pr_id).collect(),
        seq,
        dt: standardize_durations(&raw_dt, &params.dt),
        lengths,
        static_matrix: apply_preprocess(params, samples),
        y_log: y_seconds
            .iter()
            .map(|&y| target_log(y))
            .collect::<Result<_, _>>()?,
        y_seconds,
        deadline_seconds: samples
            .iter()
            .map(|s| s.deadline_seconds() as f64)
            .collect(),
        elapsed_seconds: samples
            .iter()
            .map(|s| s.truncation.elapsed_time as f64)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    pub params: PreprocessParams,
    pub train: EncodedSplit,
    pub val: EncodedSplit,
    pub test: EncodedSplit,
}

impl EncodedDataset {
    /// Fits on the training split and encodes all three.
    pub fn build(set: &SampleSet, split: &Split) -> Result<Self, FeatureError> {
        let pick = |idx: &[usize]| idx.iter().map(|&i| &set.samples[i]).collect::<Vec<_>>();
        let (train, val, test) = (pick(&split.train), pick(&split.val), pick(&split.test));
        let params = fit_preprocess(&train, &set.vocab)?;
        Ok(EncodedDataset {
            train: encode_split(&params, &train)?,
            val: encode_split(&params, &val)?,
            test: encode_split(&params, &test)?,
            params,
        })
    }
}

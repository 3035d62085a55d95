use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureError, PrefixSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("split fractions must be in [0, 1] and sum to 1, got {train}/{val}/{test}")]
pub struct BadFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, BadFractions> {
        let ok = [train, val, test].iter().all(|f| (0.0..=1.0).contains(f))
            && (train + val + test - 1.0).abs() <= 1e-9;
        if ok {
            Ok(SplitFractions { train, val, test })
        } else {
            Err(BadFractions { train, val, test })
        }
    }
}

/// Case counts per split for `n` cases: train rounds to nearest, validation is floored,
/// test takes the rest.
pub fn split_sizes(n: usize, fractions: SplitFractions) -> (usize, usize, usize) {
    let train = ((n as f64) * fractions.train).round().min(n as f64) as usize;
    let val = (((n as f64) * fractions.val).floor() as usize).min(n - train);
    (train, val, n - train - val)
}

/// Sample indices per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles distinct case IDs with `seed` and partitions them, so every sample of a case lands
/// in the same split. Indices within a split keep sample order.
pub fn split_dataset(
    samples: &[PrefixSample],
    fractions: SplitFractions,
    seed: u64,
) -> Result<Split, FeatureError> {
    let mut cases: Vec<u64> = samples
        .iter()
        .map(|s| s.pr_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if cases.len() < 3 {
        return Err(FeatureError::TooFewCases(cases.len()));
    }
    cases.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_sizes(cases.len(), fractions);
    let train: BTreeSet<u64> = cases[..n_train].iter().copied().collect();
    let val: BTreeSet<u64> = cases[n_train..n_train + n_val].iter().copied().collect();
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (i, s) in samples.iter().enumerate() {
        if train.contains(&s.pr_id) {
            split.train.push(i);
        } else if val.contains(&s.pr_id) {
            split.val.push(i);
        } else {
            split.test.push(i);
        }
    }
    Ok(split)
}

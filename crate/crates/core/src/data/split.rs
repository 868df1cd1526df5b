use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{MotgnnError, Result};
use crate::rng::{seeded, streams};

/// Train / validation / test fractions; test takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

/// Disjoint, exhaustive index sets. Each list is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled with a generator seeded by
/// `seed`, then cut at `round(train * n_c)` and `round(validation * n_c)`.
/// The test part gets the remainder, so every part is within one sample of
/// its exact per-class share.
pub fn stratified_split(labels: &[u8], ratios: SplitRatios, seed: u64) -> Result<SplitIndices> {
    let sum = ratios.train + ratios.validation + ratios.test;
    if !(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0)
        || (sum - 1.0).abs() > 1e-9
    {
        return Err(MotgnnError::Config(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let mut rng = seeded(seed, streams::SPLIT);
    let mut split = SplitIndices {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for class in [0u8, 1] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        let n = members.len();
        let n_train = (ratios.train * n as f64).round() as usize;
        let n_val = (ratios.validation * n as f64).round() as usize;
        if n < 3 || n_train == 0 || n_val == 0 || n_train + n_val >= n {
            return Err(MotgnnError::InvalidData(format!(
                "class {class} has {n} samples, too few to populate train, validation and test"
            )));
        }
        members.shuffle(&mut rng);
        split.train.extend_from_slice(&members[..n_train]);
        split.validation.extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

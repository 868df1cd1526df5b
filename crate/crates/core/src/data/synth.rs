use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{minmax_normalize, MultiOmicsDataset, OmicsMatrix};
use crate::error::{MotgnnError, Result};
use crate::rng::{seeded, streams};
use crate::{MODALITY_NAMES, NUM_MODALITIES};

/// Planted-signal generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: [usize; NUM_MODALITIES],
    /// Informative columns per modality.
    pub n_informative: [usize; NUM_MODALITIES],
    /// Mean shift of informative columns for class 1, in noise standard deviations.
    pub effect_size: f64,
    /// Class 0 count divided by class 1 count.
    pub imbalance: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_samples: 300,
            n_features: [2000, 2000, 400],
            n_informative: [30, 30, 10],
            effect_size: 1.5,
            imbalance: 3.0,
        }
    }
}

/// Ground-truth informative column indices, ascending, per modality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedFeatures {
    pub columns: [Vec<usize>; NUM_MODALITIES],
}

/// Draw a three-modality dataset in which `n_informative[i]` random columns of
/// modality `i` are shifted by `effect_size` for class 1 on top of unit
/// Gaussian noise. Every column is min-max normalized afterwards.
///
/// Class counts are exact: `round(n / (1 + imbalance))` samples get label 1.
pub fn generate_synthetic(
    config: &SynthConfig,
    seed: u64,
) -> Result<(MultiOmicsDataset, PlantedFeatures)> {
    let n = config.n_samples;
    if n < 10 {
        return Err(MotgnnError::Config(format!("synthetic n = {n} is below 10")));
    }
    for i in 0..NUM_MODALITIES {
        if config.n_features[i] == 0 || config.n_informative[i] > config.n_features[i] {
            return Err(MotgnnError::Config(format!(
                "modality {i}: {} informative of {} features",
                config.n_informative[i], config.n_features[i]
            )));
        }
    }
    if !(config.imbalance > 0.0 && config.imbalance.is_finite()) || !config.effect_size.is_finite()
    {
        return Err(MotgnnError::Config(
            "imbalance must be positive and effect size finite".into(),
        ));
    }
    let n_pos = ((n as f64) / (1.0 + config.imbalance)).round() as usize;
    if n_pos == 0 || n_pos == n {
        return Err(MotgnnError::Config(format!(
            "imbalance {} leaves a class empty at n = {n}",
            config.imbalance
        )));
    }

    let mut label_rng = seeded(seed, streams::SYNTH_LABELS);
    let mut labels = vec![0u8; n - n_pos];
    labels.extend(std::iter::repeat_n(1u8, n_pos));
    labels.shuffle(&mut label_rng);

    let width = (n - 1).to_string().len();
    let sample_ids: Vec<String> = (0..n).map(|i| format!("S{i:0width$}")).collect();

    let mut planted_rng = seeded(seed, streams::SYNTH_PLANTED);
    let mut value_rng = seeded(seed, streams::SYNTH_VALUES);
    let mut planted: Vec<Vec<usize>> = Vec::with_capacity(NUM_MODALITIES);
    let mut modalities = Vec::with_capacity(NUM_MODALITIES);
    for i in 0..NUM_MODALITIES {
        let p = config.n_features[i];
        let mut cols = index::sample(&mut planted_rng, p, config.n_informative[i]).into_vec();
        cols.sort_unstable();
        let mut informative = vec![false; p];
        for &c in &cols {
            informative[c] = true;
        }
        let mut values = Array2::<f64>::zeros((n, p));
        for ((r, c), v) in values.indexed_iter_mut() {
            let noise: f64 = value_rng.sample(StandardNormal);
            let shift = if informative[c] && labels[r] == 1 {
                config.effect_size
            } else {
                0.0
            };
            *v = noise + shift;
        }
        let fw = (p - 1).to_string().len();
        let names = (0..p)
            .map(|c| format!("{}_{c:0fw$}", MODALITY_NAMES[i]))
            .collect();
        let raw = OmicsMatrix::new(values, names, sample_ids.clone())?;
        modalities.push(minmax_normalize(&raw).0);
        planted.push(cols);
    }
    let modalities: [OmicsMatrix; NUM_MODALITIES] = modalities.try_into().expect("three");
    let columns: [Vec<usize>; NUM_MODALITIES] = planted.try_into().expect("three");
    Ok((
        MultiOmicsDataset::new(modalities, labels)?,
        PlantedFeatures { columns },
    ))
}

//! Multi-omics data containers, CSV I/O, normalization, stratified splits and
//! a planted-signal synthetic generator.

mod io;
mod normalize;
mod split;
mod synth;

use std::collections::{BTreeMap, HashSet};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{MotgnnError, Result};
use crate::NUM_MODALITIES;

pub use io::{load_labels_csv, load_omics_csv, write_labels_csv, write_omics_csv};
pub use normalize::{minmax_normalize, NormalizationStats};
pub use split::{stratified_split, SplitIndices, SplitRatios};
pub use synth::{generate_synthetic, PlantedFeatures, SynthConfig};

/// One modality's samples x features block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmicsMatrix {
    values: Array2<f64>,
    feature_names: Vec<String>,
    sample_ids: Vec<String>,
}

impl OmicsMatrix {
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = values.dim();
        if feature_names.len() != p {
            return Err(MotgnnError::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                p
            )));
        }
        if sample_ids.len() != n {
            return Err(MotgnnError::Shape(format!(
                "{} sample ids for {} rows",
                sample_ids.len(),
                n
            )));
        }
        if let Some(dup) = first_duplicate(&feature_names) {
            return Err(MotgnnError::InvalidData(format!(
                "duplicate feature name `{dup}`"
            )));
        }
        if let Some(dup) = first_duplicate(&sample_ids) {
            return Err(MotgnnError::InvalidData(format!(
                "duplicate sample id `{dup}`"
            )));
        }
        if let Some(((r, c), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MotgnnError::InvalidData(format!(
                "non-finite value {v} at row {r}, column {c}"
            )));
        }
        Ok(OmicsMatrix {
            values,
            feature_names,
            sample_ids,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Copy of the rows at `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> OmicsMatrix {
        OmicsMatrix {
            values: self.values.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
        }
    }

    /// Copy of the columns at `cols`, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<OmicsMatrix> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_features()) {
            return Err(MotgnnError::Shape(format!(
                "column {bad} out of range for {} features",
                self.n_features()
            )));
        }
        Ok(OmicsMatrix {
            values: self.values.select(Axis(1), cols),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            sample_ids: self.sample_ids.clone(),
        })
    }
}

fn first_duplicate(items: &[String]) -> Option<&str> {
    let mut seen = HashSet::with_capacity(items.len());
    items.iter().find(|s| !seen.insert(s.as_str())).map(|s| s.as_str())
}

/// Three aligned modalities (methylation, mRNA, miRNA) and binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOmicsDataset {
    modalities: [OmicsMatrix; NUM_MODALITIES],
    labels: Vec<u8>,
}

impl MultiOmicsDataset {
    pub fn new(modalities: [OmicsMatrix; NUM_MODALITIES], labels: Vec<u8>) -> Result<Self> {
        let ids = modalities[0].sample_ids();
        for (i, m) in modalities.iter().enumerate().skip(1) {
            if m.sample_ids() != ids {
                return Err(MotgnnError::InvalidData(format!(
                    "modality {} sample ids differ from modality 0",
                    i
                )));
            }
        }
        if labels.len() != ids.len() {
            return Err(MotgnnError::Shape(format!(
                "{} labels for {} samples",
                labels.len(),
                ids.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(MotgnnError::InvalidData(format!("label {bad} is not 0 or 1")));
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(MotgnnError::InvalidData(
                "labels contain a single class".into(),
            ));
        }
        Ok(MultiOmicsDataset { modalities, labels })
    }

    pub fn modalities(&self) -> &[OmicsMatrix; NUM_MODALITIES] {
        &self.modalities
    }

    pub fn modality(&self, i: usize) -> &OmicsMatrix {
        &self.modalities[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        self.modalities[0].sample_ids()
    }

    /// Same samples with `labels` swapped in.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self> {
        MultiOmicsDataset::new(self.modalities.clone(), labels)
    }

    /// Column-wise concatenation of all modalities, with their feature names.
    pub fn concatenated(&self) -> OmicsMatrix {
        let views: Vec<_> = self.modalities.iter().map(|m| m.values().view()).collect();
        let values = ndarray::concatenate(Axis(1), &views).expect("row counts agree");
        let names = self
            .modalities
            .iter()
            .flat_map(|m| m.feature_names().iter().cloned())
            .collect();
        OmicsMatrix {
            values,
            feature_names: names,
            sample_ids: self.sample_ids().to_vec(),
        }
    }
}

/// Samples dropped by [`align_samples`]; index 3 counts the label table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignReport {
    pub retained: usize,
    pub dropped: [usize; NUM_MODALITIES + 1],
}

/// Keep the samples present in all three matrices and the label map, ordered
/// by sample id.
pub fn align_samples(
    m1: &OmicsMatrix,
    m2: &OmicsMatrix,
    m3: &OmicsMatrix,
    labels: &BTreeMap<String, u8>,
) -> Result<(MultiOmicsDataset, AlignReport)> {
    let mats = [m1, m2, m3];
    for (i, m) in mats.iter().enumerate() {
        if m.n_samples() == 0 || m.n_features() == 0 {
            return Err(MotgnnError::InvalidData(format!("modality {i} is empty")));
        }
    }
    let sets: Vec<HashSet<&str>> = mats
        .iter()
        .map(|m| m.sample_ids().iter().map(String::as_str).collect())
        .collect();
    // BTreeMap iteration is already lexicographic.
    let common: Vec<&str> = labels
        .keys()
        .map(String::as_str)
        .filter(|id| sets.iter().all(|s| s.contains(id)))
        .collect();
    if common.is_empty() {
        return Err(MotgnnError::InvalidData(
            "no sample id is shared by all modalities and the label table".into(),
        ));
    }

    let mut dropped = [0usize; NUM_MODALITIES + 1];
    let mut aligned = Vec::with_capacity(NUM_MODALITIES);
    for (i, m) in mats.iter().enumerate() {
        let pos: std::collections::HashMap<&str, usize> = m
            .sample_ids()
            .iter()
            .enumerate()
            .map(|(r, id)| (id.as_str(), r))
            .collect();
        let rows: Vec<usize> = common.iter().map(|id| pos[id]).collect();
        dropped[i] = m.n_samples() - rows.len();
        if dropped[i] > 0 {
            log::info!("modality {i}: dropped {} unmatched samples", dropped[i]);
        }
        aligned.push(m.select_rows(&rows));
    }
    dropped[NUM_MODALITIES] = labels.len() - common.len();
    if dropped[NUM_MODALITIES] > 0 {
        log::info!(
            "labels: dropped {} unmatched samples",
            dropped[NUM_MODALITIES]
        );
    }

    let y: Vec<u8> = common.iter().map(|id| labels[*id]).collect();
    let modalities: [OmicsMatrix; NUM_MODALITIES] =
        aligned.try_into().expect("three modalities");
    let dataset = MultiOmicsDataset::new(modalities, y)?;
    Ok((
        dataset,
        AlignReport {
            retained: common.len(),
            dropped,
        },
    ))
}

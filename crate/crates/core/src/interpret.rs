//! Feature importance from masked-layer weights, biomarker ranking and
//! relative graph importance.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{MotgnnError, Result};
use crate::graph::FeatureGraph;
use crate::model::{BranchModel, FusionModel};
use crate::NUM_MODALITIES;

/// Per-node importance for one modality, in graph node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub columns: Vec<usize>,
    pub names: Vec<String>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub column: usize,
    pub feature: String,
    pub score: f64,
}

/// Sum of `|W[j, u]|` over unmasked outgoing connections of each input node.
pub fn masked_importance(weight: &Array2<f64>, mask: &Array2<f64>) -> Result<Vec<f64>> {
    if weight.dim() != mask.dim() {
        return Err(MotgnnError::Shape(format!(
            "weight {:?} vs mask {:?}",
            weight.dim(),
            mask.dim()
        )));
    }
    Ok(weight
        .rows()
        .into_iter()
        .zip(mask.rows())
        .map(|(w, m)| w.iter().zip(m).filter(|(_, &m)| m == 1.0).map(|(w, _)| w.abs()).sum())
        .collect())
}

pub fn feature_importance(branch: &BranchModel, graph: &FeatureGraph) -> Result<ImportanceScores> {
    if branch.masked.width() != graph.num_nodes() {
        return Err(MotgnnError::Shape(format!(
            "branch width {} vs graph with {} nodes",
            branch.masked.width(),
            graph.num_nodes()
        )));
    }
    if branch.masked.mask() != graph.mask() {
        return Err(MotgnnError::InvalidData("branch mask does not match the graph".into()));
    }
    Ok(ImportanceScores {
        columns: graph.node_columns().to_vec(),
        names: graph.node_names().to_vec(),
        scores: masked_importance(branch.masked.weight(), branch.masked.mask())?,
    })
}

/// Top `k` features by descending score; ties go to the lower column index.
pub fn rank_biomarkers(scores: &ImportanceScores, k: usize) -> Vec<RankedFeature> {
    let mut order: Vec<usize> = (0..scores.scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores.scores[b]
            .total_cmp(&scores.scores[a])
            .then(scores.columns[a].cmp(&scores.columns[b]))
    });
    order
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(r, i)| RankedFeature {
            rank: r + 1,
            column: scores.columns[i],
            feature: scores.names[i].clone(),
            score: scores.scores[i],
        })
        .collect()
}

/// Share of first fusion-layer weight mass (`Σ|W|`) carried by each input
/// block. `widths` are the block widths in input order.
pub fn block_importance(weight: &Array2<f64>, widths: &[usize]) -> Result<Vec<f64>> {
    let total_width: usize = widths.iter().sum();
    if total_width != weight.nrows() {
        return Err(MotgnnError::Shape(format!(
            "block widths sum to {total_width}, weight has {} rows",
            weight.nrows()
        )));
    }
    let mut offset = 0;
    let mass: Vec<f64> = widths
        .iter()
        .map(|&w| {
            let m = weight.slice(s![offset..offset + w, ..]).iter().map(|v| v.abs()).sum::<f64>();
            offset += w;
            m
        })
        .collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(MotgnnError::Degenerate("fusion weights are all zero".into()));
    }
    Ok(mass.into_iter().map(|m| m / total).collect())
}

/// Relative importance of each modality graph, read off the first fusion
/// layer.
pub type RigTriple = [f64; NUM_MODALITIES];

pub fn relative_graph_importance(fusion: &FusionModel, widths: &[usize; NUM_MODALITIES]) -> Result<RigTriple> {
    let rig = block_importance(&fusion.layer1.weight, widths)?;
    Ok([rig[0], rig[1], rig[2]])
}

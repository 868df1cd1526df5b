use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::network::{DfnNetwork, MotgnnNetwork};
use super::train::{predict, train, Batch, TrainConfig, TrainHistory};
use crate::boosting::{fit_ensemble, predict_proba, GbtConfig, GbtEnsemble};
use crate::data::{MultiOmicsDataset, SplitIndices};
use crate::error::{MotgnnError, Result};
use crate::graph::{build_feature_graph, graph_stats, reduce_matrix, FeatureGraph, GraphStats};
use crate::interpret::{feature_importance, relative_graph_importance, ImportanceScores, RigTriple};
use crate::metrics::{accuracy, f1_score, roc_auc};
use crate::NUM_MODALITIES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
}

impl SplitMetrics {
    pub fn compute(labels: &[u8], predicted: &[u8], probabilities: &[f64]) -> Result<Self> {
        Ok(SplitMetrics {
            accuracy: accuracy(labels, predicted)?,
            auc: roc_auc(labels, probabilities)?,
            f1: f1_score(labels, predicted)?,
        })
    }
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub ensemble_fit: f64,
    pub graph_build: f64,
    pub nn_train: f64,
    pub eval: f64,
}

impl StageTiming {
    pub fn total(&self) -> f64 {
        self.ensemble_fit + self.graph_build + self.nn_train + self.eval
    }

    pub fn mean(all: &[StageTiming]) -> StageTiming {
        let n = all.len().max(1) as f64;
        let mut out = StageTiming::default();
        for t in all {
            out.ensemble_fit += t.ensemble_fit / n;
            out.graph_build += t.graph_build / n;
            out.nn_train += t.nn_train / n;
            out.eval += t.eval / n;
        }
        out
    }
}

/// Trained network together with the graphs and ensembles it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotgnnModel {
    pub network: MotgnnNetwork,
    pub graphs: Vec<FeatureGraph>,
    pub ensembles: Vec<GbtEnsemble>,
}

/// Fresh network over `graphs` with branch and fusion width from `config`.
pub fn build_model(graphs: &[FeatureGraph], config: &TrainConfig, seed: u64) -> Result<MotgnnNetwork> {
    if graphs.len() != NUM_MODALITIES {
        return Err(MotgnnError::InvalidData(format!(
            "{} graphs given, expected {NUM_MODALITIES}",
            graphs.len()
        )));
    }
    MotgnnNetwork::new(graphs, config.hidden_width, seed)
}

impl MotgnnModel {
    pub fn new(network: MotgnnNetwork, graphs: Vec<FeatureGraph>, ensembles: Vec<GbtEnsemble>) -> Result<Self> {
        let model = MotgnnModel {
            network,
            graphs,
            ensembles,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks that every branch mask is its graph's adjacency and that graph
    /// columns fit the ensemble's feature count.
    pub fn validate(&self) -> Result<()> {
        let n = self.network.branches.len();
        if n != NUM_MODALITIES || self.graphs.len() != n || self.ensembles.len() != n {
            return Err(MotgnnError::InvalidData(format!(
                "model has {n} branches, {} graphs, {} ensembles",
                self.graphs.len(),
                self.ensembles.len()
            )));
        }
        for (i, ((b, g), e)) in self.network.branches.iter().zip(&self.graphs).zip(&self.ensembles).enumerate() {
            if b.masked.mask() != g.mask() {
                return Err(MotgnnError::InvalidData(format!("branch {i} mask differs from its graph")));
            }
            if g.node_columns().iter().any(|&c| c >= e.num_features()) {
                return Err(MotgnnError::InvalidData(format!(
                    "graph {i} references columns beyond the ensemble's {} features",
                    e.num_features()
                )));
            }
        }
        Ok(())
    }

    /// Each modality restricted to its graph nodes.
    pub fn reduce(&self, dataset: &MultiOmicsDataset) -> Result<Vec<Array2<f64>>> {
        reduce_all(dataset, &self.graphs)
    }

    pub fn predict(&self, dataset: &MultiOmicsDataset) -> Result<(Vec<u8>, Vec<f64>)> {
        let reduced = self.reduce(dataset)?;
        let views: Vec<ArrayView2<f64>> = reduced.iter().map(|x| x.view()).collect();
        predict(&self.network, &views)
    }

    pub fn feature_importance(&self) -> Result<Vec<ImportanceScores>> {
        self.network
            .branches
            .iter()
            .zip(&self.graphs)
            .map(|(b, g)| feature_importance(b, g))
            .collect()
    }

    pub fn relative_graph_importance(&self) -> Result<RigTriple> {
        let w = self.network.embedding_widths();
        relative_graph_importance(&self.network.fusion, &[w[0], w[1], w[2]])
    }
}

fn reduce_all(dataset: &MultiOmicsDataset, graphs: &[FeatureGraph]) -> Result<Vec<Array2<f64>>> {
    dataset
        .modalities()
        .iter()
        .zip(graphs)
        .map(|(m, g)| Ok(reduce_matrix(m, g)?.values().clone()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub model: MotgnnModel,
    pub metrics: SplitMetrics,
    pub history: TrainHistory,
    pub timing: StageTiming,
    pub graph_stats: Vec<GraphStats>,
}

fn select_labels(labels: &[u8], rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&r| labels[r]).collect()
}

fn check_split(dataset: &MultiOmicsDataset, split: &SplitIndices) -> Result<()> {
    let n = dataset.n_samples();
    let parts = [&split.train, &split.validation, &split.test];
    if parts.iter().any(|p| p.iter().any(|&r| r >= n)) {
        return Err(MotgnnError::InvalidData(format!("split indexes beyond {n} samples")));
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err(MotgnnError::InvalidData("split has an empty part".into()));
    }
    Ok(())
}

/// Ensembles, graphs and network all see training rows only; validation
/// rows drive early stopping and test rows are scored once at the end.
pub fn run_pipeline(
    dataset: &MultiOmicsDataset,
    split: &SplitIndices,
    gbt_config: &GbtConfig,
    train_config: &TrainConfig,
) -> Result<PipelineOutcome> {
    check_split(dataset, split)?;
    gbt_config.validate()?;
    train_config.validate()?;
    let labels = dataset.labels();
    let y_train = select_labels(labels, &split.train);
    let mut timing = StageTiming::default();

    let clock = Instant::now();
    let ensembles = dataset
        .modalities()
        .iter()
        .map(|m| fit_ensemble(m.select_rows(&split.train).values().view(), &y_train, gbt_config))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("ensemble fit"))?;
    timing.ensemble_fit = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let graphs = ensembles
        .iter()
        .zip(dataset.modalities())
        .map(|(e, m)| build_feature_graph(e)?.with_names(m.feature_names()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("graph build"))?;
    let reduced = reduce_all(dataset, &graphs).map_err(|e| e.in_stage("graph build"))?;
    timing.graph_build = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (network, history) = build_model(&graphs, train_config, train_config.seed)
        .and_then(|net| {
            let train_set = Batch::gather(&reduced, labels, &split.train)?;
            let val_set = Batch::gather(&reduced, labels, &split.validation)?;
            train(net, &train_set, &val_set, train_config)
        })
        .map_err(|e| e.in_stage("network training"))?;
    timing.nn_train = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let metrics = Batch::gather(&reduced, labels, &split.test)
        .and_then(|test| {
            let (pred, prob) = predict(&network, &test.views())?;
            SplitMetrics::compute(&test.labels, &pred, &prob)
        })
        .map_err(|e| e.in_stage("evaluation"))?;
    timing.eval = clock.elapsed().as_secs_f64();

    let graph_stats = graphs.iter().map(graph_stats).collect();
    Ok(PipelineOutcome {
        model: MotgnnModel::new(network, graphs, ensembles)?,
        metrics,
        history,
        timing,
        graph_stats,
    })
}

/// One boosted ensemble over the concatenated modalities, fit on the
/// training rows.
pub fn baseline_gbt(dataset: &MultiOmicsDataset, split: &SplitIndices, gbt_config: &GbtConfig) -> Result<SplitMetrics> {
    check_split(dataset, split)?;
    let x = dataset.concatenated();
    let y_train = select_labels(dataset.labels(), &split.train);
    let ensemble = fit_ensemble(x.select_rows(&split.train).values().view(), &y_train, gbt_config)?;
    let prob = predict_proba(&ensemble, x.select_rows(&split.test).values().view())?;
    let pred: Vec<u8> = prob.iter().map(|&p| u8::from(p >= 0.5)).collect();
    SplitMetrics::compute(&select_labels(dataset.labels(), &split.test), &pred, &prob)
}

/// Two-hidden-layer feed-forward network over the concatenated modalities,
/// trained with the same loop as the graph model.
pub fn baseline_dfn(
    dataset: &MultiOmicsDataset,
    split: &SplitIndices,
    train_config: &TrainConfig,
) -> Result<(SplitMetrics, TrainHistory)> {
    check_split(dataset, split)?;
    train_config.validate()?;
    let x = vec![dataset.concatenated().values().clone()];
    let labels = dataset.labels();
    let net = DfnNetwork::new(x[0].ncols(), train_config.hidden_width, train_config.seed);
    let train_set = Batch::gather(&x, labels, &split.train)?;
    let val_set = Batch::gather(&x, labels, &split.validation)?;
    let (net, history) = train(net, &train_set, &val_set, train_config)?;
    let test = Batch::gather(&x, labels, &split.test)?;
    let (pred, prob) = predict(&net, &test.views())?;
    Ok((SplitMetrics::compute(&test.labels, &pred, &prob)?, history))
}

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{baseline_dfn, baseline_gbt, run_pipeline, MotgnnModel, SplitMetrics, StageTiming};
use super::train::TrainConfig;
use crate::boosting::GbtConfig;
use crate::data::{stratified_split, MultiOmicsDataset, SplitIndices, SplitRatios};
use crate::error::{MotgnnError, Result};
use crate::graph::GraphStats;
use crate::interpret::{rank_biomarkers, ImportanceScores, RankedFeature, RigTriple};
use crate::metrics::{summarize, Summary};
use crate::{MODALITY_NAMES, NUM_MODALITIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_repeats: usize,
    /// Repeat `r` uses seed `base_seed + r` for its split and training.
    pub base_seed: u64,
    pub top_k: usize,
    pub confidence: f64,
    pub ratios: SplitRatios,
    pub gbt: GbtConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_repeats: 20,
            base_seed: 0,
            top_k: 30,
            confidence: 0.95,
            ratios: SplitRatios::default(),
            gbt: GbtConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_repeats < 2 {
            problems.push(format!("n_repeats must be at least 2, got {}", self.n_repeats));
        }
        if self.top_k == 0 {
            problems.push("top_k must be positive".to_string());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            problems.push(format!("confidence must be in (0, 1), got {}", self.confidence));
        }
        for r in [&self.gbt.validate(), &self.train.validate()] {
            if let Err(MotgnnError::Config(m)) = r {
                problems.push(m.clone());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MotgnnError::Config(problems.join("; ")))
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_repeats as u64).map(|r| self.base_seed.wrapping_add(r)).collect()
    }

    fn split(&self, dataset: &MultiOmicsDataset, seed: u64) -> Result<SplitIndices> {
        stratified_split(dataset.labels(), self.ratios, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub seed: u64,
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
    pub rig: RigTriple,
    pub timing: StageTiming,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub graphs: Vec<GraphStats>,
}

#[derive(Debug, Clone)]
pub struct RepeatOutcome {
    pub record: RepeatRecord,
    pub model: MotgnnModel,
    pub importance: Vec<ImportanceScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub repeats: Vec<RepeatRecord>,
    pub aggregate: BTreeMap<String, Summary>,
    pub rig: RigTriple,
    pub biomarkers: BTreeMap<String, Vec<RankedFeature>>,
    pub timing: StageTiming,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub models: Vec<MotgnnModel>,
}

/// Runs `f` for every seed on `jobs` worker threads, keeping seed order.
fn map_seeds<T, F>(seeds: &[u64], jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if jobs <= 1 {
        return seeds.iter().map(|&s| f(s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MotgnnError::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| f(s)).collect())
}

pub fn run_repeat(dataset: &MultiOmicsDataset, seed: u64, config: &ExperimentConfig) -> Result<RepeatOutcome> {
    let split = config.split(dataset, seed)?;
    let train = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let out = run_pipeline(dataset, &split, &config.gbt, &train)?;
    let record = RepeatRecord {
        seed,
        accuracy: out.metrics.accuracy,
        auc: out.metrics.auc,
        f1: out.metrics.f1,
        rig: out.model.relative_graph_importance()?,
        timing: out.timing,
        epochs_run: out.history.epochs.len(),
        best_epoch: out.history.best_epoch,
        graphs: out.graph_stats,
    };
    log::info!(
        "seed {seed}: acc {:.3} auc {:.3} f1 {:.3} ({:.1}s)",
        record.accuracy,
        record.auc,
        record.f1,
        record.timing.total()
    );
    Ok(RepeatOutcome {
        record,
        importance: out.model.feature_importance()?,
        model: out.model,
    })
}

pub(crate) fn aggregate(rows: &[SplitMetrics], confidence: f64) -> Result<BTreeMap<String, Summary>> {
    let column = |f: fn(&SplitMetrics) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let mut out = BTreeMap::new();
    out.insert("accuracy".to_string(), summarize(&column(|m| m.accuracy), confidence)?);
    out.insert("auc".to_string(), summarize(&column(|m| m.auc), confidence)?);
    out.insert("f1".to_string(), summarize(&column(|m| m.f1), confidence)?);
    Ok(out)
}

/// Mean importance per original column over all repeats, counting zero for
/// repeats where the column was not a graph node. Columns never selected are
/// left out.
pub fn consensus_importance(
    dataset: &MultiOmicsDataset,
    per_repeat: &[Vec<ImportanceScores>],
) -> Vec<ImportanceScores> {
    let n = per_repeat.len().max(1) as f64;
    (0..NUM_MODALITIES)
        .map(|i| {
            let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
            let mut seen = BTreeSet::new();
            for scores in per_repeat {
                for (&c, &s) in scores[i].columns.iter().zip(&scores[i].scores) {
                    *sums.entry(c).or_default() += s;
                    seen.insert(c);
                }
            }
            let names = dataset.modality(i).feature_names();
            ImportanceScores {
                columns: sums.keys().copied().collect(),
                names: sums.keys().map(|&c| names[c].clone()).collect(),
                scores: sums.values().map(|s| s / n).collect(),
            }
        })
        .collect()
}

/// The repeated-split protocol: one independent pipeline run per seed,
/// summarized with t intervals, averaged graph importance and consensus
/// biomarker rankings.
pub fn run_experiment(dataset: &MultiOmicsDataset, config: &ExperimentConfig, jobs: usize) -> Result<ExperimentRun> {
    config.validate()?;
    let outcomes = map_seeds(&config.seeds(), jobs, |s| run_repeat(dataset, s, config))?;
    let metrics: Vec<SplitMetrics> = outcomes
        .iter()
        .map(|o| SplitMetrics {
            accuracy: o.record.accuracy,
            auc: o.record.auc,
            f1: o.record.f1,
        })
        .collect();
    let n = outcomes.len() as f64;
    let mut rig = [0.0; NUM_MODALITIES];
    for o in &outcomes {
        for (acc, r) in rig.iter_mut().zip(o.record.rig) {
            *acc += r / n;
        }
    }
    let importance: Vec<Vec<ImportanceScores>> = outcomes.iter().map(|o| o.importance.clone()).collect();
    let biomarkers = consensus_importance(dataset, &importance)
        .iter()
        .zip(MODALITY_NAMES)
        .map(|(s, name)| (name.to_string(), rank_biomarkers(s, config.top_k)))
        .collect();
    let timing = StageTiming::mean(&outcomes.iter().map(|o| o.record.timing).collect::<Vec<_>>());
    let (repeats, models) = outcomes.into_iter().map(|o| (o.record, o.model)).unzip();
    Ok(ExperimentRun {
        report: ExperimentReport {
            repeats,
            aggregate: aggregate(&metrics, config.confidence)?,
            rig,
            biomarkers,
            timing,
        },
        models,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Gbt,
    Dfn,
}

impl std::str::FromStr for Baseline {
    type Err = MotgnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gbt" => Ok(Baseline::Gbt),
            "dfn" => Ok(Baseline::Dfn),
            other => Err(MotgnnError::Config(format!("unknown baseline `{other}` (expected gbt or dfn)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub seed: u64,
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub baseline: Baseline,
    pub repeats: Vec<BaselineRecord>,
    pub aggregate: BTreeMap<String, Summary>,
}

/// A baseline on the same split sequence as [`run_experiment`].
pub fn run_baseline_experiment(
    dataset: &MultiOmicsDataset,
    config: &ExperimentConfig,
    which: Baseline,
    jobs: usize,
) -> Result<BaselineReport> {
    config.validate()?;
    let metrics = map_seeds(&config.seeds(), jobs, |seed| {
        let split = config.split(dataset, seed)?;
        match which {
            Baseline::Gbt => baseline_gbt(dataset, &split, &config.gbt),
            Baseline::Dfn => {
                let train = TrainConfig {
                    seed,
                    ..config.train.clone()
                };
                Ok(baseline_dfn(dataset, &split, &train)?.0)
            }
        }
    })?;
    let repeats = config
        .seeds()
        .into_iter()
        .zip(&metrics)
        .map(|(seed, m)| BaselineRecord {
            seed,
            accuracy: m.accuracy,
            auc: m.auc,
            f1: m.f1,
        })
        .collect();
    Ok(BaselineReport {
        baseline: which,
        repeats,
        aggregate: aggregate(&metrics, config.confidence)?,
    })
}

//! The graph-masked multi-omics network, its training loop and the
//! repeated-split experiment protocol with baselines.

mod checkpoint;
mod experiment;
mod network;
mod pipeline;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use experiment::{
    consensus_importance, run_baseline_experiment, run_experiment, run_repeat, Baseline, BaselineRecord,
    BaselineReport, ExperimentConfig, ExperimentReport, ExperimentRun, RepeatOutcome, RepeatRecord,
};
pub use network::{BranchModel, DfnNetwork, FusionModel, MotgnnNetwork, Network};
pub use pipeline::{
    baseline_dfn, baseline_gbt, build_model, run_pipeline, MotgnnModel, PipelineOutcome, SplitMetrics, StageTiming,
};
pub use train::{evaluate_loss, predict, train, Batch, EpochRecord, TrainConfig, TrainHistory};

//! MOTGNN: multi-omics binary classification with tree-generated feature graphs.
//!
//! The pipeline has three stages per split:
//!
//! 1. A gradient-boosted tree ensemble is fitted on each omics modality; the
//!    features it splits on become graph nodes and parent-child split pairs
//!    become undirected edges ([`boosting`], [`graph`]).
//! 2. Each modality's reduced matrix feeds a branch whose first layer is a
//!    dense layer masked by the graph adjacency ([`nn`], [`model`]).
//! 3. Branch embeddings are concatenated and classified by a small
//!    feed-forward fusion network.
//!
//! Trained models expose connection-weight feature scores and per-modality
//! graph importance ([`interpret`]). [`metrics`] holds accuracy, F1, ROC-AUC
//! and the t-interval aggregation used for repeated-split reports.

pub mod boosting;
pub mod data;
pub mod error;
pub mod graph;
pub mod interpret;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod rng;

pub use error::{MotgnnError, Result};

/// Number of omics modalities handled by the model.
pub const NUM_MODALITIES: usize = 3;

/// Short names for the three modalities, in branch order.
pub const MODALITY_NAMES: [&str; NUM_MODALITIES] = ["meth", "mrna", "mirna"];

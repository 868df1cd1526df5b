use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::error::{MotgnnError, Result};
use crate::nn::{l2_penalty, softmax2_bce, softmax2_positive, Adam};
use crate::rng::{seeded, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub dropout: f64,
    pub l2_lambda: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub hidden_width: usize,
    /// Refresh batch-norm statistics from the training rows (dropout off)
    /// after every epoch instead of relying on the momentum averages
    /// gathered under dropout.
    pub recalibrate_batch_norm: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 16,
            max_epochs: 500,
            dropout: 0.5,
            l2_lambda: 0.01,
            patience: 10,
            min_delta: 0.001,
            hidden_width: 64,
            recalibrate_batch_norm: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Every violated constraint, joined into one message.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            problems.push(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size < 2 {
            problems.push(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if self.max_epochs == 0 {
            problems.push("max_epochs must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.l2_lambda.is_finite() && self.l2_lambda >= 0.0) {
            problems.push(format!("l2_lambda must be non-negative, got {}", self.l2_lambda));
        }
        if self.patience == 0 {
            problems.push("patience must be positive".to_string());
        }
        if !(self.min_delta.is_finite() && self.min_delta >= 0.0) {
            problems.push(format!("min_delta must be non-negative, got {}", self.min_delta));
        }
        if self.hidden_width == 0 {
            problems.push("hidden_width must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MotgnnError::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Validation loss of the freshly initialized network.
    pub initial_val_loss: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were restored.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Input blocks plus labels for one set of samples.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Vec<Array2<f64>>,
    pub labels: Vec<u8>,
}

impl Batch {
    pub fn new(inputs: Vec<Array2<f64>>, labels: Vec<u8>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(MotgnnError::Shape("batch without input blocks".into()));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.nrows() != labels.len() {
                return Err(MotgnnError::Shape(format!(
                    "input block {i} has {} rows for {} labels",
                    x.nrows(),
                    labels.len()
                )));
            }
        }
        Ok(Batch { inputs, labels })
    }

    /// Rows `rows` of each block in `blocks`.
    pub fn gather(blocks: &[Array2<f64>], labels: &[u8], rows: &[usize]) -> Result<Self> {
        let inputs = blocks.iter().map(|b| b.select(Axis(0), rows)).collect();
        Batch::new(inputs, rows.iter().map(|&r| labels[r]).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn views(&self) -> Vec<ArrayView2<'_, f64>> {
        self.inputs.iter().map(|x| x.view()).collect()
    }

    fn rows(&self, rows: &[usize]) -> Batch {
        Batch {
            inputs: self.inputs.iter().map(|b| b.select(Axis(0), rows)).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

fn weight_penalty<N: Network>(net: &N, lambda: f64) -> (f64, Vec<ndarray::ArrayD<f64>>) {
    let params = net.params();
    let weights: Vec<_> = net.weight_slots().into_iter().map(|i| params[i].view()).collect();
    l2_penalty(&weights, lambda)
}

/// Cross-entropy on `data` in inference mode plus the L2 penalty.
pub fn evaluate_loss<N: Network>(net: &N, data: &Batch, l2_lambda: f64) -> Result<f64> {
    let logits = net.forward_eval(&data.views())?;
    let (bce, _) = softmax2_bce(&logits, &data.labels);
    Ok(bce + weight_penalty(net, l2_lambda).0)
}

/// Mini-batch boundaries over `n` shuffled rows. A trailing batch of one row
/// is folded into the previous batch so batch norm always sees two rows.
fn batch_bounds(n: usize, size: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n).step_by(size).map(|s| (s, (s + size).min(n))).collect();
    if out.len() > 1 && out.last().map(|(s, e)| e - s) == Some(1) {
        let (_, end) = out.pop().unwrap();
        out.last_mut().unwrap().1 = end;
    }
    out
}

fn check_classes(labels: &[u8], what: &str) -> Result<()> {
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(MotgnnError::Degenerate(format!("{what} set contains a single class")));
    }
    Ok(())
}

/// Adam on cross-entropy plus L2 with early stopping on validation loss.
///
/// An epoch counts as an improvement when validation loss drops more than
/// `min_delta` below the best improving value so far; training stops after
/// `patience` epochs without one. The returned network carries the
/// parameters from the epoch with the lowest validation loss.
pub fn train<N: Network>(mut net: N, train: &Batch, val: &Batch, config: &TrainConfig) -> Result<(N, TrainHistory)> {
    config.validate()?;
    if train.len() < 2 {
        return Err(MotgnnError::InvalidData(format!(
            "training set has {} samples, need at least 2",
            train.len()
        )));
    }
    if val.is_empty() {
        return Err(MotgnnError::InvalidData("validation set is empty".into()));
    }
    check_classes(&train.labels, "training")?;
    check_classes(&val.labels, "validation")?;

    let mut shuffle_rng = seeded(config.seed, streams::SHUFFLE);
    let mut dropout_rng = seeded(config.seed, streams::DROPOUT);
    let mut adam = Adam::new(config.learning_rate);
    let slots = net.weight_slots();

    if config.recalibrate_batch_norm {
        net.recalibrate(&train.views())?;
    }
    let initial_val_loss = evaluate_loss(&net, val, config.l2_lambda)?;
    let mut best = net.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut reference = f64::INFINITY;
    let mut wait = 0;
    let mut epochs = Vec::new();
    let mut stopped_early = false;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut shuffle_rng);
        let mut train_loss = 0.0;
        for (start, end) in batch_bounds(order.len(), config.batch_size) {
            let batch = train.rows(&order[start..end]);
            let (logits, cache) = net.forward_train(&batch.views(), config.dropout, &mut dropout_rng)?;
            let (bce, grad_logits) = softmax2_bce(&logits, &batch.labels);
            let mut grads = net.backward(&cache, &grad_logits)?;
            let (penalty, penalty_grads) = weight_penalty(&net, config.l2_lambda);
            for (&slot, pg) in slots.iter().zip(penalty_grads) {
                grads[slot] += &pg;
            }
            net.update_running_stats(&cache);
            adam.step(&mut net.params_mut(), &grads)?;
            train_loss += (bce + penalty) * batch.len() as f64;
        }
        train_loss /= train.len() as f64;
        if config.recalibrate_batch_norm {
            net.recalibrate(&train.views())?;
        }
        let val_loss = evaluate_loss(&net, val, config.l2_lambda)?;
        if !val_loss.is_finite() {
            return Err(MotgnnError::Degenerate(format!("validation loss diverged at epoch {epoch}")));
        }
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            best = net.clone();
        }
        if val_loss < reference - config.min_delta {
            reference = val_loss;
            wait = 0;
        } else {
            wait += 1;
            if wait >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }
    Ok((
        best,
        TrainHistory {
            initial_val_loss,
            epochs,
            best_epoch,
            best_val_loss: best_loss,
            stopped_early,
        },
    ))
}

/// Class-1 probabilities and hard labels (`ŷ ≥ 0.5` maps to 1).
pub fn predict<N: Network>(net: &N, inputs: &[ArrayView2<f64>]) -> Result<(Vec<u8>, Vec<f64>)> {
    let probs = softmax2_positive(&net.forward_eval(inputs)?);
    let labels = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
    Ok((labels, probs))
}

//! Binary classification metrics and repeated-run aggregation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{MotgnnError, Result};

/// Counts for the positive class `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_pair<T>(labels: &[u8], other: &[T]) -> Result<()> {
    if labels.is_empty() {
        return Err(MotgnnError::InvalidData("metric on empty input".into()));
    }
    if labels.len() != other.len() {
        return Err(MotgnnError::Shape(format!(
            "{} labels vs {} predictions",
            labels.len(),
            other.len()
        )));
    }
    Ok(())
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionCounts> {
    check_pair(labels, predictions)?;
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == 1, p == 1) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn accuracy(labels: &[u8], predictions: &[u8]) -> Result<f64> {
    let c = confusion(labels, predictions)?;
    Ok((c.tp + c.tn) as f64 / c.total() as f64)
}

/// F1 of the positive class. Returns 0 when precision + recall is 0, so
/// aggregates never see NaN.
pub fn f1_score(labels: &[u8], predictions: &[u8]) -> Result<f64> {
    let c = confusion(labels, predictions)?;
    if c.tp == 0 {
        return Ok(0.0);
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// ROC-AUC as the Mann-Whitney statistic `U / (n+ n-)` with tied scores
/// counted as half a win.
///
/// Ranks are kept doubled so the statistic is an exact integer before the
/// final division.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    check_pair(labels, scores)?;
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(MotgnnError::InvalidData(format!("non-finite score {s}")));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MotgnnError::InvalidData(
            "roc_auc needs both classes".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum over positives of doubled average rank (1-based).
    let mut rank2_pos: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // positions i..j share rank (i + 1 + j) / 2
        let rank2 = (i + 1 + j) as u64;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        rank2_pos += rank2 * pos_in_group;
        i = j;
    }
    let u2 = rank2_pos - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// Mean, sample standard deviation and a symmetric t-interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-sided Student-t critical value, e.g. `t_quantile(0.95, 19) ≈ 2.093`.
pub fn t_quantile(confidence: f64, df: usize) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) || df == 0 {
        return Err(MotgnnError::InvalidData(format!(
            "t quantile needs confidence in (0,1) and df >= 1, got {confidence}, {df}"
        )));
    }
    let t = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| MotgnnError::InvalidData(e.to_string()))?;
    Ok(t.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// `mean ± t_{(1+c)/2, n-1} · sd / √n`.
pub fn summarize(values: &[f64], confidence: f64) -> Result<Summary> {
    let n = values.len();
    if n < 2 {
        return Err(MotgnnError::InvalidData(format!(
            "summarize needs at least 2 values, got {n}"
        )));
    }
    if values.iter().all(|&v| v == values[0]) {
        return interval(values[0], 0.0, n, confidence);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    interval(mean, sd, n, confidence)
}

/// Interval from an already-computed mean and sample SD over `n` runs.
pub fn interval(mean: f64, sd: f64, n: usize, confidence: f64) -> Result<Summary> {
    let half = t_quantile(confidence, n.saturating_sub(1))? * sd / (n as f64).sqrt();
    Ok(Summary {
        mean,
        sd,
        ci_low: mean - half,
        ci_high: mean + half,
    })
}

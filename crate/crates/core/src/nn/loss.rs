use ndarray::{Array2, ArrayD, ArrayViewD};

use crate::boosting::sigmoid;

/// Probability clamp applied before taking logs.
const PROB_EPS: f64 = 1e-12;

/// Row-wise softmax of a two-column logit matrix.
pub fn softmax2(logits: &Array2<f64>) -> Array2<f64> {
    assert_eq!(logits.ncols(), 2, "softmax2 needs two logit columns");
    let mut out = Array2::zeros(logits.raw_dim());
    for (l, mut o) in logits.rows().into_iter().zip(out.rows_mut()) {
        let d = l[1] - l[0];
        o[0] = sigmoid(-d);
        o[1] = sigmoid(d);
    }
    out
}

/// Class-1 probability per row, `sigmoid(l1 - l0)`.
pub fn softmax2_positive(logits: &Array2<f64>) -> Vec<f64> {
    assert_eq!(logits.ncols(), 2, "softmax2 needs two logit columns");
    logits.rows().into_iter().map(|l| sigmoid(l[1] - l[0])).collect()
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean binary cross-entropy of the softmax class-1 probability, and its
/// gradient with respect to the logits.
///
/// Clamping `ŷ` to `[ε, 1-ε]` is the same as clamping the logit difference to
/// `±ln((1-ε)/ε)`; rows outside that band get zero gradient.
pub fn softmax2_bce(logits: &Array2<f64>, y: &[u8]) -> (f64, Array2<f64>) {
    assert_eq!(logits.ncols(), 2, "softmax2 needs two logit columns");
    assert_eq!(logits.nrows(), y.len(), "logit rows vs labels");
    let bound = ((1.0 - PROB_EPS) / PROB_EPS).ln();
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for ((l, mut g), &yi) in logits.rows().into_iter().zip(grad.rows_mut()).zip(y) {
        let d = l[1] - l[0];
        let dc = d.clamp(-bound, bound);
        // -ln ŷ = softplus(-d), -ln(1-ŷ) = softplus(d)
        loss += if yi == 1 { softplus(-dc) } else { softplus(dc) };
        if d.abs() < bound {
            let r = (sigmoid(d) - yi as f64) / n;
            g[1] = r;
            g[0] = -r;
        }
    }
    (loss / n, grad)
}

/// `λ Σ w²` over the given weight arrays and its gradient `2λw` per array.
pub fn l2_penalty(weights: &[ArrayViewD<f64>], lambda: f64) -> (f64, Vec<ArrayD<f64>>) {
    let penalty = lambda * weights.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
    let grads = weights.iter().map(|w| w.mapv(|v| 2.0 * lambda * v)).collect();
    (penalty, grads)
}

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MotgnnError, Result};

fn uniform_limit(fan_in: usize) -> f64 {
    (6.0 / fan_in.max(1) as f64).sqrt()
}

/// Square dense layer whose weights are restricted to the nonzero pattern of
/// a symmetric 0/1 mask with unit diagonal: `y = x (W ⊙ M) + b`.
///
/// Weights outside the mask are stored as exact zeros and never receive a
/// gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaskedRepr", into = "MaskedRepr")]
pub struct MaskedDense {
    weight: Array2<f64>,
    bias: Array1<f64>,
    mask: Array2<f64>,
    /// Row-major `(input, output)` positions where the mask is 1.
    active: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct MaskedDenseGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub input: Array2<f64>,
}

impl MaskedDense {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>, mask: Array2<f64>) -> Result<Self> {
        let p = mask.nrows();
        if mask.ncols() != p || weight.dim() != (p, p) || bias.len() != p {
            return Err(MotgnnError::Shape(format!(
                "masked layer: mask {:?}, weight {:?}, bias {}",
                mask.dim(),
                weight.dim(),
                bias.len()
            )));
        }
        for ((i, j), &m) in mask.indexed_iter() {
            if m != 0.0 && m != 1.0 {
                return Err(MotgnnError::InvalidData(format!("mask entry ({i},{j}) = {m} is not 0/1")));
            }
            if m != mask[[j, i]] {
                return Err(MotgnnError::InvalidData("mask is not symmetric".into()));
            }
            if i == j && m != 1.0 {
                return Err(MotgnnError::InvalidData(format!("mask diagonal ({i},{i}) is 0")));
            }
        }
        let active = mask
            .indexed_iter()
            .filter(|(_, &m)| m == 1.0)
            .map(|(ij, _)| ij)
            .collect();
        let weight = &weight * &mask;
        Ok(MaskedDense {
            weight,
            bias,
            mask,
            active,
        })
    }

    /// Uniform init in `±sqrt(6 / fan_in)` where `fan_in` is the number of
    /// unmasked inputs of each output unit; masked weights start at 0.
    pub fn init<R: Rng>(mask: Array2<f64>, rng: &mut R) -> Result<Self> {
        let p = mask.nrows();
        let mut layer = MaskedDense::new(Array2::zeros((p, p)), Array1::zeros(p), mask)?;
        let fan_in: Vec<usize> = layer
            .mask
            .columns()
            .into_iter()
            .map(|c| c.iter().filter(|&&m| m == 1.0).count())
            .collect();
        for &(j, u) in &layer.active {
            let a = uniform_limit(fan_in[u]);
            layer.weight[[j, u]] = rng.random_range(-a..a);
        }
        Ok(layer)
    }

    pub fn width(&self) -> usize {
        self.bias.len()
    }

    pub fn weight(&self) -> &Array2<f64> {
        &self.weight
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn mask(&self) -> &Array2<f64> {
        &self.mask
    }

    pub fn active(&self) -> &[(usize, usize)] {
        &self.active
    }

    #[cfg(test)]
    pub(crate) fn weight_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weight
    }

    /// Weight and bias for in-place optimizer updates. Off-mask weights
    /// must stay zero.
    pub(crate) fn params_mut(&mut self) -> (&mut Array2<f64>, &mut Array1<f64>) {
        (&mut self.weight, &mut self.bias)
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.width() {
            return Err(MotgnnError::Shape(format!(
                "masked layer expects {} inputs, got {}",
                self.width(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut out = Array2::zeros((x.nrows(), self.width()));
        for (xr, mut or) in x.rows().into_iter().zip(out.rows_mut()) {
            for &(j, u) in &self.active {
                or[u] += xr[j] * self.weight[[j, u]];
            }
            or += &self.bias;
        }
        Ok(out)
    }

    /// Gradients for `x` and the upstream gradient of the pre-activation.
    pub fn backward(&self, x: ArrayView2<f64>, upstream: ArrayView2<f64>) -> Result<MaskedDenseGrads> {
        self.check_input(&x)?;
        if upstream.dim() != (x.nrows(), self.width()) {
            return Err(MotgnnError::Shape(format!(
                "masked layer upstream {:?} for input {:?}",
                upstream.dim(),
                x.dim()
            )));
        }
        let p = self.width();
        let mut gw = Array2::zeros((p, p));
        let mut gx = Array2::zeros(x.raw_dim());
        for ((xr, ur), mut gxr) in x.rows().into_iter().zip(upstream.rows()).zip(gx.rows_mut()) {
            for &(j, u) in &self.active {
                gw[[j, u]] += xr[j] * ur[u];
                gxr[j] += ur[u] * self.weight[[j, u]];
            }
        }
        Ok(MaskedDenseGrads {
            weight: gw,
            bias: upstream.sum_axis(Axis(0)),
            input: gx,
        })
    }
}

/// Masked weights stored only at active positions.
#[derive(Serialize, Deserialize)]
struct MaskedRepr {
    width: usize,
    /// Off-diagonal active positions `(i, j)` with `i < j`.
    edges: Vec<(usize, usize)>,
    /// Weights at every active position, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<MaskedDense> for MaskedRepr {
    fn from(l: MaskedDense) -> Self {
        MaskedRepr {
            width: l.width(),
            edges: l.active.iter().copied().filter(|&(i, j)| i < j).collect(),
            weights: l.active.iter().map(|&(i, j)| l.weight[[i, j]]).collect(),
            bias: l.bias.to_vec(),
        }
    }
}

impl TryFrom<MaskedRepr> for MaskedDense {
    type Error = MotgnnError;

    fn try_from(r: MaskedRepr) -> Result<Self> {
        let p = r.width;
        let mut mask = Array2::eye(p);
        for &(i, j) in &r.edges {
            if i >= p || j >= p {
                return Err(MotgnnError::Checkpoint(format!("stored mask edge ({i},{j}) out of range")));
            }
            mask[[i, j]] = 1.0;
            mask[[j, i]] = 1.0;
        }
        let mut layer = MaskedDense::new(Array2::zeros((p, p)), Array1::from(r.bias), mask)?;
        if r.weights.len() != layer.active.len() {
            return Err(MotgnnError::Checkpoint(format!(
                "masked layer has {} weights for {} active positions",
                r.weights.len(),
                layer.active.len()
            )));
        }
        for (&(i, j), w) in layer.active.iter().zip(r.weights) {
            layer.weight[[i, j]] = w;
        }
        Ok(layer)
    }
}

/// Fully connected layer `y = x W + b` with `W: in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub input: Array2<f64>,
}

impl Dense {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.ncols() != bias.len() {
            return Err(MotgnnError::Shape(format!(
                "dense weight {:?} with bias {}",
                weight.dim(),
                bias.len()
            )));
        }
        Ok(Dense { weight, bias })
    }

    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let a = uniform_limit(inputs);
        Dense {
            weight: Array2::from_shape_fn((inputs, outputs), |_| rng.random_range(-a..a)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() {
            return Err(MotgnnError::Shape(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.weight) + &self.bias)
    }

    pub fn backward(&self, x: ArrayView2<f64>, upstream: ArrayView2<f64>) -> Result<DenseGrads> {
        if x.ncols() != self.inputs() || upstream.dim() != (x.nrows(), self.outputs()) {
            return Err(MotgnnError::Shape(format!(
                "dense backward: input {:?}, upstream {:?}, weight {:?}",
                x.dim(),
                upstream.dim(),
                self.weight.dim()
            )));
        }
        Ok(DenseGrads {
            weight: x.t().dot(&upstream),
            bias: upstream.sum_axis(Axis(0)),
            input: upstream.dot(&self.weight.t()),
        })
    }
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Passes `upstream` where the pre-activation was strictly positive.
pub fn relu_backward(pre: &Array2<f64>, upstream: &Array2<f64>) -> Array2<f64> {
    let mut g = upstream.clone();
    ndarray::Zip::from(&mut g).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    g
}

/// Inverted dropout. In training mode each unit is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; the returned mask
/// holds those per-unit factors for the backward pass.
pub fn dropout_apply<R: Rng>(
    x: &Array2<f64>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> (Array2<f64>, Option<Array2<f64>>) {
    assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0, 1)");
    if !training || rate == 0.0 {
        return (x.clone(), None);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = Array2::from_shape_fn(x.raw_dim(), |_| {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    });
    (x * &mask, Some(mask))
}

/// Batch normalization over the sample axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
    mean: Array1<f64>,
    var: Array1<f64>,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum: 0.9,
            eps: 1e-5,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.width() {
            return Err(MotgnnError::Shape(format!(
                "batch norm expects {} units, got {}",
                self.width(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Normalize with batch statistics. Running statistics are left alone;
    /// apply [`BatchNorm::update_running`] to fold the batch in.
    pub fn forward_train(&self, x: &Array2<f64>) -> Result<(Array2<f64>, BatchNormCache)> {
        self.check(x)?;
        let n = x.nrows();
        if n < 2 {
            return Err(MotgnnError::InvalidData(
                "batch norm in training mode needs at least 2 samples".into(),
            ));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("nonempty");
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = &centered * &inv_std;
        let y = &x_hat * &self.gamma + &self.beta;
        Ok((
            y,
            BatchNormCache {
                x_hat,
                inv_std,
                mean,
                var,
            },
        ))
    }

    pub fn update_running(&mut self, cache: &BatchNormCache) {
        let m = self.momentum;
        self.running_mean = &self.running_mean * m + &cache.mean * (1.0 - m);
        self.running_var = &self.running_var * m + &cache.var * (1.0 - m);
    }

    /// Replace the running statistics with one batch's statistics.
    pub fn set_running(&mut self, cache: &BatchNormCache) {
        self.running_mean = cache.mean.clone();
        self.running_var = cache.var.clone();
    }

    pub fn forward_eval(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x)?;
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        Ok((x - &self.running_mean) * &inv_std * &self.gamma + &self.beta)
    }

    /// Returns `(dx, dgamma, dbeta)`.
    pub fn backward(
        &self,
        cache: &BatchNormCache,
        dy: &Array2<f64>,
    ) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let n = dy.nrows() as f64;
        let dbeta = dy.sum_axis(Axis(0));
        let dgamma = (dy * &cache.x_hat).sum_axis(Axis(0));
        let scale = &self.gamma * &cache.inv_std / n;
        let dx = (dy * n - &dbeta - &cache.x_hat * &dgamma) * &scale;
        (dx, dgamma, dbeta)
    }
}

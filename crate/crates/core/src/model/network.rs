use ndarray::{concatenate, s, Array2, ArrayD, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{MotgnnError, Result};
use crate::graph::FeatureGraph;
use crate::nn::{
    dropout_apply, relu, relu_backward, BatchNorm, BatchNormCache, Dense, MaskedDense,
};
use crate::rng::{seeded, streams, Rng};

/// A differentiable classifier producing two-column logits from one or more
/// input blocks. Parameter order from [`Network::params`] and
/// [`Network::params_mut`] matches the gradient order from
/// [`Network::backward`].
pub trait Network: Clone + Send {
    type Cache;

    fn input_widths(&self) -> Vec<usize>;

    /// Training-mode pass with dropout. Batch-norm running statistics are not
    /// touched; see [`Network::update_running_stats`].
    fn forward_train(
        &self,
        inputs: &[ArrayView2<f64>],
        dropout: f64,
        rng: &mut Rng,
    ) -> Result<(Array2<f64>, Self::Cache)>;

    /// Deterministic inference pass.
    fn forward_eval(&self, inputs: &[ArrayView2<f64>]) -> Result<Array2<f64>>;

    fn backward(&self, cache: &Self::Cache, grad_logits: &Array2<f64>) -> Result<Vec<ArrayD<f64>>>;

    fn update_running_stats(&mut self, cache: &Self::Cache);

    /// Sets batch-norm statistics to those of `inputs` passed through the
    /// network without dropout.
    fn recalibrate(&mut self, inputs: &[ArrayView2<f64>]) -> Result<()>;

    fn params(&self) -> Vec<ArrayViewD<'_, f64>>;

    fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>>;

    /// Indices into [`Network::params`] of weight matrices (L2-penalized).
    fn weight_slots(&self) -> Vec<usize>;
}

fn check_inputs(inputs: &[ArrayView2<f64>], widths: &[usize]) -> Result<()> {
    if inputs.len() != widths.len() {
        return Err(MotgnnError::Shape(format!(
            "{} input blocks for {} expected",
            inputs.len(),
            widths.len()
        )));
    }
    let rows = inputs[0].nrows();
    for (i, (x, &w)) in inputs.iter().zip(widths).enumerate() {
        if x.ncols() != w {
            return Err(MotgnnError::Shape(format!(
                "input block {i} has {} columns, expected {w}",
                x.ncols()
            )));
        }
        if x.nrows() != rows {
            return Err(MotgnnError::Shape(format!(
                "input block {i} has {} rows, block 0 has {rows}",
                x.nrows()
            )));
        }
    }
    Ok(())
}

/// Two hidden layers (dense, batch norm, ReLU, dropout) and a two-unit head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub layer1: Dense,
    pub bn1: BatchNorm,
    pub layer2: Dense,
    pub bn2: BatchNorm,
    pub head: Dense,
}

pub struct FusionCache {
    input: Array2<f64>,
    pre1: BatchNormCache,
    bn_out1: Array2<f64>,
    drop1: Option<Array2<f64>>,
    act1: Array2<f64>,
    pre2: BatchNormCache,
    bn_out2: Array2<f64>,
    drop2: Option<Array2<f64>>,
    act2: Array2<f64>,
}

pub struct FusionGrads {
    pub params: Vec<ArrayD<f64>>,
    pub input: Array2<f64>,
}

fn apply_mask(g: Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => g * m,
        None => g,
    }
}

impl FusionModel {
    pub fn init(inputs: usize, width: usize, rng: &mut Rng) -> Self {
        FusionModel {
            layer1: Dense::init(inputs, width, rng),
            bn1: BatchNorm::new(width),
            layer2: Dense::init(width, width, rng),
            bn2: BatchNorm::new(width),
            head: Dense::init(width, 2, rng),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layer1.inputs()
    }

    pub fn forward_train(
        &self,
        z: Array2<f64>,
        dropout: f64,
        rng: &mut Rng,
    ) -> Result<(Array2<f64>, FusionCache)> {
        let (bn_out1, pre1) = self.bn1.forward_train(&self.layer1.forward(z.view())?)?;
        let (act1, drop1) = dropout_apply(&relu(&bn_out1), dropout, true, rng);
        let (bn_out2, pre2) = self.bn2.forward_train(&self.layer2.forward(act1.view())?)?;
        let (act2, drop2) = dropout_apply(&relu(&bn_out2), dropout, true, rng);
        let logits = self.head.forward(act2.view())?;
        Ok((
            logits,
            FusionCache {
                input: z,
                pre1,
                bn_out1,
                drop1,
                act1,
                pre2,
                bn_out2,
                drop2,
                act2,
            },
        ))
    }

    pub fn forward_eval(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        let h1 = relu(&self.bn1.forward_eval(&self.layer1.forward(z)?)?);
        let h2 = relu(&self.bn2.forward_eval(&self.layer2.forward(h1.view())?)?);
        self.head.forward(h2.view())
    }

    /// Gradients in [`FusionModel::params`] order plus the input gradient.
    pub fn backward(&self, c: &FusionCache, grad_logits: &Array2<f64>) -> Result<FusionGrads> {
        let head = self.head.backward(c.act2.view(), grad_logits.view())?;
        let g = relu_backward(&c.bn_out2, &apply_mask(head.input, &c.drop2));
        let (g, dgamma2, dbeta2) = self.bn2.backward(&c.pre2, &g);
        let l2 = self.layer2.backward(c.act1.view(), g.view())?;
        let g = relu_backward(&c.bn_out1, &apply_mask(l2.input, &c.drop1));
        let (g, dgamma1, dbeta1) = self.bn1.backward(&c.pre1, &g);
        let l1 = self.layer1.backward(c.input.view(), g.view())?;
        Ok(FusionGrads {
            params: vec![
                l1.weight.into_dyn(),
                l1.bias.into_dyn(),
                dgamma1.into_dyn(),
                dbeta1.into_dyn(),
                l2.weight.into_dyn(),
                l2.bias.into_dyn(),
                dgamma2.into_dyn(),
                dbeta2.into_dyn(),
                head.weight.into_dyn(),
                head.bias.into_dyn(),
            ],
            input: l1.input,
        })
    }

    pub fn update_running_stats(&mut self, c: &FusionCache) {
        self.bn1.update_running(&c.pre1);
        self.bn2.update_running(&c.pre2);
    }

    pub fn recalibrate(&mut self, z: ArrayView2<f64>) -> Result<()> {
        let (y1, c1) = self.bn1.forward_train(&self.layer1.forward(z)?)?;
        self.bn1.set_running(&c1);
        let (_, c2) = self.bn2.forward_train(&self.layer2.forward(relu(&y1).view())?)?;
        self.bn2.set_running(&c2);
        Ok(())
    }

    pub fn params(&self) -> Vec<ArrayViewD<'_, f64>> {
        vec![
            self.layer1.weight.view().into_dyn(),
            self.layer1.bias.view().into_dyn(),
            self.bn1.gamma.view().into_dyn(),
            self.bn1.beta.view().into_dyn(),
            self.layer2.weight.view().into_dyn(),
            self.layer2.bias.view().into_dyn(),
            self.bn2.gamma.view().into_dyn(),
            self.bn2.beta.view().into_dyn(),
            self.head.weight.view().into_dyn(),
            self.head.bias.view().into_dyn(),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![
            self.layer1.weight.view_mut().into_dyn(),
            self.layer1.bias.view_mut().into_dyn(),
            self.bn1.gamma.view_mut().into_dyn(),
            self.bn1.beta.view_mut().into_dyn(),
            self.layer2.weight.view_mut().into_dyn(),
            self.layer2.bias.view_mut().into_dyn(),
            self.bn2.gamma.view_mut().into_dyn(),
            self.bn2.beta.view_mut().into_dyn(),
            self.head.weight.view_mut().into_dyn(),
            self.head.bias.view_mut().into_dyn(),
        ]
    }

    const WEIGHT_SLOTS: [usize; 3] = [0, 4, 8];
}

/// Plain feed-forward baseline: the fusion stack applied to one
/// concatenated input block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfnNetwork {
    pub fusion: FusionModel,
}

impl DfnNetwork {
    pub fn new(inputs: usize, width: usize, seed: u64) -> Self {
        let mut rng = seeded(seed, streams::INIT);
        DfnNetwork {
            fusion: FusionModel::init(inputs, width, &mut rng),
        }
    }
}

impl Network for DfnNetwork {
    type Cache = FusionCache;

    fn input_widths(&self) -> Vec<usize> {
        vec![self.fusion.input_width()]
    }

    fn forward_train(
        &self,
        inputs: &[ArrayView2<f64>],
        dropout: f64,
        rng: &mut Rng,
    ) -> Result<(Array2<f64>, FusionCache)> {
        check_inputs(inputs, &self.input_widths())?;
        self.fusion.forward_train(inputs[0].to_owned(), dropout, rng)
    }

    fn forward_eval(&self, inputs: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
        check_inputs(inputs, &self.input_widths())?;
        self.fusion.forward_eval(inputs[0])
    }

    fn backward(&self, cache: &FusionCache, grad_logits: &Array2<f64>) -> Result<Vec<ArrayD<f64>>> {
        Ok(self.fusion.backward(cache, grad_logits)?.params)
    }

    fn update_running_stats(&mut self, cache: &FusionCache) {
        self.fusion.update_running_stats(cache);
    }

    fn recalibrate(&mut self, inputs: &[ArrayView2<f64>]) -> Result<()> {
        check_inputs(inputs, &self.input_widths())?;
        self.fusion.recalibrate(inputs[0])
    }

    fn params(&self) -> Vec<ArrayViewD<'_, f64>> {
        self.fusion.params()
    }

    fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        self.fusion.params_mut()
    }

    fn weight_slots(&self) -> Vec<usize> {
        FusionModel::WEIGHT_SLOTS.to_vec()
    }
}

/// One modality branch: graph-masked layer of width `p*`, then a dense layer
/// whose ReLU output is the branch embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchModel {
    pub masked: MaskedDense,
    pub hidden: Dense,
}

pub struct BranchCache {
    input: Array2<f64>,
    masked_pre: Array2<f64>,
    drop: Option<Array2<f64>>,
    dropped: Array2<f64>,
    hidden_pre: Array2<f64>,
}

impl BranchModel {
    pub fn init(graph: &FeatureGraph, width: usize, rng: &mut Rng) -> Result<Self> {
        let masked = MaskedDense::init(graph.mask(), rng)?;
        let hidden = Dense::init(masked.width(), width, rng);
        Ok(BranchModel { masked, hidden })
    }

    pub fn input_width(&self) -> usize {
        self.masked.width()
    }

    pub fn embedding_width(&self) -> usize {
        self.hidden.outputs()
    }

    fn forward_train(
        &self,
        x: ArrayView2<f64>,
        dropout: f64,
        rng: &mut Rng,
    ) -> Result<(Array2<f64>, BranchCache)> {
        let masked_pre = self.masked.forward(x)?;
        let (dropped, drop) = dropout_apply(&relu(&masked_pre), dropout, true, rng);
        let hidden_pre = self.hidden.forward(dropped.view())?;
        let z = relu(&hidden_pre);
        Ok((
            z,
            BranchCache {
                input: x.to_owned(),
                masked_pre,
                drop,
                dropped,
                hidden_pre,
            },
        ))
    }

    fn forward_eval(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let h = relu(&self.masked.forward(x)?);
        Ok(relu(&self.hidden.forward(h.view())?))
    }

    /// Gradients `[masked W, masked b, hidden W, hidden b]`.
    fn backward(&self, c: &BranchCache, grad_z: &Array2<f64>) -> Result<Vec<ArrayD<f64>>> {
        let g = relu_backward(&c.hidden_pre, grad_z);
        let hidden = self.hidden.backward(c.dropped.view(), g.view())?;
        let g = relu_backward(&c.masked_pre, &apply_mask(hidden.input, &c.drop));
        let masked = self.masked.backward(c.input.view(), g.view())?;
        Ok(vec![
            masked.weight.into_dyn(),
            masked.bias.into_dyn(),
            hidden.weight.into_dyn(),
            hidden.bias.into_dyn(),
        ])
    }
}

/// Three masked branches feeding one fusion network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotgnnNetwork {
    pub branches: Vec<BranchModel>,
    pub fusion: FusionModel,
}

pub struct MotgnnCache {
    branches: Vec<BranchCache>,
    fusion: FusionCache,
}

const BRANCH_PARAMS: usize = 4;

impl MotgnnNetwork {
    /// Initialize one branch per graph with embedding width `width`, and a
    /// fusion network over the concatenated embeddings.
    pub fn new(graphs: &[FeatureGraph], width: usize, seed: u64) -> Result<Self> {
        if graphs.is_empty() {
            return Err(MotgnnError::InvalidData("no graphs given".into()));
        }
        if width == 0 {
            return Err(MotgnnError::Config("hidden width must be positive".into()));
        }
        let mut rng = seeded(seed, streams::INIT);
        let branches = graphs
            .iter()
            .map(|g| {
                if g.num_nodes() == 0 {
                    Err(MotgnnError::Degenerate("empty feature graph".into()))
                } else {
                    BranchModel::init(g, width, &mut rng)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let fusion = FusionModel::init(branches.len() * width, width, &mut rng);
        MotgnnNetwork::from_parts(branches, fusion)
    }

    pub fn from_parts(branches: Vec<BranchModel>, fusion: FusionModel) -> Result<Self> {
        let total: usize = branches.iter().map(BranchModel::embedding_width).sum();
        if total != fusion.input_width() {
            return Err(MotgnnError::Shape(format!(
                "branch embeddings sum to {total}, fusion expects {}",
                fusion.input_width()
            )));
        }
        Ok(MotgnnNetwork { branches, fusion })
    }

    pub fn embedding_widths(&self) -> Vec<usize> {
        self.branches.iter().map(BranchModel::embedding_width).collect()
    }

    /// Concatenated branch embeddings in inference mode.
    pub fn embed(&self, inputs: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
        check_inputs(inputs, &self.input_widths())?;
        let zs = self
            .branches
            .iter()
            .zip(inputs)
            .map(|(b, x)| b.forward_eval(*x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::concat(&zs))
    }

    fn concat(parts: &[Array2<f64>]) -> Array2<f64> {
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        concatenate(Axis(1), &views).expect("row counts agree")
    }
}

impl Network for MotgnnNetwork {
    type Cache = MotgnnCache;

    fn input_widths(&self) -> Vec<usize> {
        self.branches.iter().map(BranchModel::input_width).collect()
    }

    fn forward_train(
        &self,
        inputs: &[ArrayView2<f64>],
        dropout: f64,
        rng: &mut Rng,
    ) -> Result<(Array2<f64>, MotgnnCache)> {
        check_inputs(inputs, &self.input_widths())?;
        let mut zs = Vec::with_capacity(self.branches.len());
        let mut caches = Vec::with_capacity(self.branches.len());
        for (b, x) in self.branches.iter().zip(inputs) {
            let (z, c) = b.forward_train(*x, dropout, rng)?;
            zs.push(z);
            caches.push(c);
        }
        let (logits, fusion) = self.fusion.forward_train(Self::concat(&zs), dropout, rng)?;
        Ok((
            logits,
            MotgnnCache {
                branches: caches,
                fusion,
            },
        ))
    }

    fn forward_eval(&self, inputs: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
        let z = self.embed(inputs)?;
        self.fusion.forward_eval(z.view())
    }

    fn backward(&self, cache: &MotgnnCache, grad_logits: &Array2<f64>) -> Result<Vec<ArrayD<f64>>> {
        let fusion = self.fusion.backward(&cache.fusion, grad_logits)?;
        let mut grads = Vec::with_capacity(self.branches.len() * BRANCH_PARAMS + fusion.params.len());
        let mut offset = 0;
        for (b, c) in self.branches.iter().zip(&cache.branches) {
            let w = b.embedding_width();
            let gz = fusion.input.slice(s![.., offset..offset + w]).to_owned();
            grads.extend(b.backward(c, &gz)?);
            offset += w;
        }
        grads.extend(fusion.params);
        Ok(grads)
    }

    fn update_running_stats(&mut self, cache: &MotgnnCache) {
        self.fusion.update_running_stats(&cache.fusion);
    }

    fn recalibrate(&mut self, inputs: &[ArrayView2<f64>]) -> Result<()> {
        let z = self.embed(inputs)?;
        self.fusion.recalibrate(z.view())
    }

    fn params(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut out = Vec::new();
        for b in &self.branches {
            out.push(b.masked.weight().view().into_dyn());
            out.push(b.masked.bias().view().into_dyn());
            out.push(b.hidden.weight.view().into_dyn());
            out.push(b.hidden.bias.view().into_dyn());
        }
        out.extend(self.fusion.params());
        out
    }

    fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut out = Vec::new();
        for b in &mut self.branches {
            let BranchModel { masked, hidden } = b;
            let (w, bias) = masked.params_mut();
            out.push(w.view_mut().into_dyn());
            out.push(bias.view_mut().into_dyn());
            out.push(hidden.weight.view_mut().into_dyn());
            out.push(hidden.bias.view_mut().into_dyn());
        }
        out.extend(self.fusion.params_mut());
        out
    }

    fn weight_slots(&self) -> Vec<usize> {
        let mut slots = Vec::new();
        for i in 0..self.branches.len() {
            slots.push(i * BRANCH_PARAMS);
            slots.push(i * BRANCH_PARAMS + 2);
        }
        let base = self.branches.len() * BRANCH_PARAMS;
        slots.extend(FusionModel::WEIGHT_SLOTS.iter().map(|s| base + s));
        slots
    }
}

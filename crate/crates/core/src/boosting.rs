//! Second-order gradient-boosted regression trees for binary log-loss, with
//! exact greedy split search.
//!
//! Each round fits one tree to the gradients `p - y` and hessians `p(1 - p)`
//! of the current logits. Split gain is
//! `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ` and leaves take the Newton
//! step `−G/(H+λ)`. Prediction is `sigmoid(base_logit + η Σ tree(x))`.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{MotgnnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub num_trees: usize,
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
    /// Minimum gain for a split to be kept.
    pub gamma: f64,
    pub learning_rate: f64,
    pub min_child_hessian: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            num_trees: 100,
            max_depth: 6,
            lambda: 1.0,
            gamma: 0.0,
            learning_rate: 0.3,
            min_child_hessian: 1.0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.num_trees < 1 {
            problems.push("num_trees must be >= 1".to_string());
        }
        if self.max_depth < 1 {
            problems.push("max_depth must be >= 1".to_string());
        }
        if !(self.lambda >= 0.0) {
            problems.push("lambda must be >= 0".to_string());
        }
        if !(self.gamma >= 0.0) {
            problems.push("gamma must be >= 0".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            problems.push("learning_rate must be in (0, 1]".to_string());
        }
        if !(self.min_child_hessian >= 0.0) {
            problems.push("min_child_hessian must be >= 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MotgnnError::Config(problems.join("; ")))
        }
    }

    fn split_params(&self) -> SplitParams {
        SplitParams {
            lambda: self.lambda,
            gamma: self.gamma,
            min_child_hessian: self.min_child_hessian,
        }
    }
}

/// Serializes `f64` as a decimal string with 17 significant digits, which
/// parses back to the identical value.
mod decimal17 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:.16e}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        #[serde(with = "decimal17")]
        weight: f64,
    },
    /// Rows with `x[feature] < threshold` go left.
    Internal {
        feature: usize,
        #[serde(with = "decimal17")]
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn split_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Internal { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn num_internal(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.num_internal() + right.num_internal(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtEnsemble {
    trees: Vec<TreeNode>,
    #[serde(with = "decimal17")]
    learning_rate: f64,
    #[serde(with = "decimal17")]
    base_logit: f64,
    num_features: usize,
}

impl GbtEnsemble {
    pub fn new(
        trees: Vec<TreeNode>,
        learning_rate: f64,
        base_logit: f64,
        num_features: usize,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(MotgnnError::InvalidData("ensemble has no trees".into()));
        }
        Ok(GbtEnsemble {
            trees,
            learning_rate,
            base_logit,
            num_features,
        })
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn base_logit(&self) -> f64 {
        self.base_logit
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: GbtEnsemble = serde_json::from_str(s)
            .map_err(|e| MotgnnError::Checkpoint(format!("ensemble json: {e}")))?;
        if e.trees.is_empty() {
            return Err(MotgnnError::Checkpoint("ensemble has no trees".into()));
        }
        Ok(e)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean binary log-loss of `logits` against `y`.
pub fn log_loss(y: &[u8], logits: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(logits)
        .map(|(&yi, &z)| if yi == 1 { softplus(-z) } else { softplus(z) })
        .sum();
    total / y.len() as f64
}

/// Gradient and hessian of the log-loss with respect to logits.
pub fn logistic_grad_hess(y: &[u8], logits: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(y.len(), logits.len(), "label and logit lengths differ");
    y.iter()
        .zip(logits)
        .map(|(&yi, &z)| {
            let p = sigmoid(z);
            (p - yi as f64, p * (1.0 - p))
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_hessian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Feature-major copy of a sample matrix (`p x n`), so a feature's values are
/// contiguous.
pub struct FeatureColumns {
    values: Array2<f64>,
}

impl FeatureColumns {
    pub fn new(x: ArrayView2<f64>) -> Self {
        FeatureColumns {
            values: x.t().as_standard_layout().into_owned(),
        }
    }

    pub fn num_features(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.values.ncols()
    }

    fn column(&self, f: usize) -> &[f64] {
        self.values.row(f).to_slice().expect("standard layout")
    }
}

/// The samples of one tree node, stored once per feature in ascending order of
/// that feature's value. `order[f * m .. (f + 1) * m]` is feature `f`'s order.
pub struct NodeSamples {
    order: Vec<u32>,
    len: usize,
}

impl NodeSamples {
    /// All samples, sorted per feature (ties by sample index).
    pub fn root(cols: &FeatureColumns) -> Self {
        let n = cols.num_samples();
        let mut order = Vec::with_capacity(n * cols.num_features());
        for f in 0..cols.num_features() {
            let col = cols.column(f);
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            order.extend_from_slice(&idx);
        }
        NodeSamples { order, len: n }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn feature_order(&self, f: usize) -> &[u32] {
        &self.order[f * self.len..(f + 1) * self.len]
    }

    /// Sample indices in ascending index order.
    fn samples_ascending(&self) -> Vec<u32> {
        let mut s = self.feature_order(0).to_vec();
        s.sort_unstable();
        s
    }

    fn partition(&self, go_left: &[bool], n_features: usize) -> (NodeSamples, NodeSamples) {
        let n_left = self.feature_order(0).iter().filter(|&&s| go_left[s as usize]).count();
        let n_right = self.len - n_left;
        let mut left = Vec::with_capacity(n_left * n_features);
        let mut right = Vec::with_capacity(n_right * n_features);
        for f in 0..n_features {
            for &s in self.feature_order(f) {
                if go_left[s as usize] {
                    left.push(s);
                } else {
                    right.push(s);
                }
            }
        }
        (
            NodeSamples { order: left, len: n_left },
            NodeSamples { order: right, len: n_right },
        )
    }
}

fn leaf_score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Threshold strictly between `lo < hi` so that `lo < t <= hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid <= lo {
        hi
    } else {
        mid
    }
}

/// Exact greedy search over every feature and every midpoint between
/// consecutive distinct values. Returns the highest-gain split whose children
/// both carry at least `min_child_hessian`, provided its gain (after `γ`) is
/// positive. Ties go to the lowest feature index, then the lowest threshold.
pub fn best_split(
    cols: &FeatureColumns,
    node: &NodeSamples,
    g: &[f64],
    h: &[f64],
    params: &SplitParams,
) -> Option<SplitCandidate> {
    if node.len() < 2 {
        return None;
    }
    let (g_sum, h_sum) = node
        .samples_ascending()
        .iter()
        .fold((0.0, 0.0), |(a, b), &s| (a + g[s as usize], b + h[s as usize]));
    let parent = leaf_score(g_sum, h_sum, params.lambda);
    let mut best: Option<SplitCandidate> = None;
    for f in 0..cols.num_features() {
        let col = cols.column(f);
        let order = node.feature_order(f);
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..order.len() - 1 {
            let s = order[i] as usize;
            gl += g[s];
            hl += h[s];
            let (lo, hi) = (col[s], col[order[i + 1] as usize]);
            if lo >= hi {
                continue;
            }
            let (gr, hr) = (g_sum - gl, h_sum - hl);
            if hl < params.min_child_hessian || hr < params.min_child_hessian {
                continue;
            }
            let gain = 0.5
                * (leaf_score(gl, hl, params.lambda) + leaf_score(gr, hr, params.lambda) - parent)
                - params.gamma;
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best.filter(|b| b.gain > 0.0)
}

struct TreeGrower<'a> {
    cols: &'a FeatureColumns,
    g: &'a [f64],
    h: &'a [f64],
    params: SplitParams,
    max_depth: usize,
    go_left: Vec<bool>,
}

impl TreeGrower<'_> {
    fn grow(&mut self, node: NodeSamples, depth: usize) -> TreeNode {
        if depth < self.max_depth {
            if let Some(split) = best_split(self.cols, &node, self.g, self.h, &self.params) {
                let col = self.cols.column(split.feature);
                for &s in node.feature_order(0) {
                    self.go_left[s as usize] = col[s as usize] < split.threshold;
                }
                let (l, r) = node.partition(&self.go_left, self.cols.num_features());
                drop(node);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                return TreeNode::Internal {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                };
            }
        }
        let (gs, hs) = node
            .samples_ascending()
            .iter()
            .fold((0.0, 0.0), |(a, b), &s| (a + self.g[s as usize], b + self.h[s as usize]));
        TreeNode::Leaf {
            weight: -gs / (hs + self.params.lambda),
        }
    }
}

/// Grow one tree depth-first to `config.max_depth` on the given gradients.
pub fn fit_tree(cols: &FeatureColumns, g: &[f64], h: &[f64], config: &GbtConfig) -> TreeNode {
    fit_tree_on(cols, NodeSamples::root(cols), g, h, config)
}

fn fit_tree_on(
    cols: &FeatureColumns,
    root: NodeSamples,
    g: &[f64],
    h: &[f64],
    config: &GbtConfig,
) -> TreeNode {
    assert!(!root.is_empty(), "cannot grow a tree on zero samples");
    let mut grower = TreeGrower {
        cols,
        g,
        h,
        params: config.split_params(),
        max_depth: config.max_depth,
        go_left: vec![false; cols.num_samples()],
    };
    grower.grow(root, 0)
}

/// Fit `config.num_trees` rounds starting from logit 0. Also returns the
/// training log-loss before any tree and after each round.
pub fn fit_ensemble_traced(
    x: ArrayView2<f64>,
    y: &[u8],
    config: &GbtConfig,
) -> Result<(GbtEnsemble, Vec<f64>)> {
    config.validate()?;
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(MotgnnError::Shape(format!("{} labels for {n} rows", y.len())));
    }
    if n < 4 || p == 0 {
        return Err(MotgnnError::InvalidData(format!(
            "need at least 4 samples and 1 feature, got {n} x {p}"
        )));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(MotgnnError::InvalidData("labels contain a single class".into()));
    }
    let cols = FeatureColumns::new(x);
    let root = NodeSamples::root(&cols);
    let base_logit = 0.0;
    let mut logits = vec![base_logit; n];
    let mut losses = vec![log_loss(y, &logits)];
    let mut trees = Vec::with_capacity(config.num_trees);
    for _ in 0..config.num_trees {
        let (g, h) = logistic_grad_hess(y, &logits);
        let root_copy = NodeSamples {
            order: root.order.clone(),
            len: root.len,
        };
        let tree = fit_tree_on(&cols, root_copy, &g, &h, config);
        for (z, row) in logits.iter_mut().zip(x.rows()) {
            *z += config.learning_rate * tree.predict_row(row);
        }
        losses.push(log_loss(y, &logits));
        trees.push(tree);
    }
    let ensemble = GbtEnsemble::new(trees, config.learning_rate, base_logit, p)?;
    Ok((ensemble, losses))
}

pub fn fit_ensemble(x: ArrayView2<f64>, y: &[u8], config: &GbtConfig) -> Result<GbtEnsemble> {
    fit_ensemble_traced(x, y, config).map(|(e, _)| e)
}

fn check_columns(ensemble: &GbtEnsemble, x: &ArrayView2<f64>) -> Result<()> {
    if x.ncols() != ensemble.num_features {
        return Err(MotgnnError::Shape(format!(
            "ensemble expects {} columns, got {}",
            ensemble.num_features,
            x.ncols()
        )));
    }
    Ok(())
}

pub fn predict_logit(ensemble: &GbtEnsemble, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    check_columns(ensemble, &x)?;
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let mut z = ensemble.base_logit;
            for t in &ensemble.trees {
                z += ensemble.learning_rate * t.predict_row(row);
            }
            z
        })
        .collect())
}

pub fn predict_proba(ensemble: &GbtEnsemble, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    Ok(predict_logit(ensemble, x)?.into_iter().map(sigmoid).collect())
}

/// Ascending set of columns that appear as a split feature in any tree.
pub fn used_features(ensemble: &GbtEnsemble) -> Result<Vec<usize>> {
    let mut used = vec![false; ensemble.num_features];
    let mut stack: Vec<&TreeNode> = ensemble.trees.iter().collect();
    while let Some(node) = stack.pop() {
        if let TreeNode::Internal {
            feature,
            left,
            right,
            ..
        } = node
        {
            used[*feature] = true;
            stack.push(left);
            stack.push(right);
        }
    }
    let cols: Vec<usize> = used
        .iter()
        .enumerate()
        .filter(|(_, &u)| u)
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(MotgnnError::Degenerate(
            "no tree in the ensemble made a split".into(),
        ));
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn no_min_hessian() -> GbtConfig {
        GbtConfig {
            min_child_hessian: 0.0,
            ..GbtConfig::default()
        }
    }

    #[test]
    fn grad_hess_values() {
        let (g, h) = logistic_grad_hess(&[1, 0, 1], &[0.0, 0.0, 800.0]);
        assert_eq!(g[0], -0.5);
        assert_eq!(h[0], 0.25);
        assert_eq!(g[1], 0.5);
        assert_eq!(h[1], 0.25);
        assert!(g[2].abs() < 1e-300 && h[2].abs() < 1e-300);
    }

    #[test]
    fn gain_on_four_points() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let (g, h) = logistic_grad_hess(&[0, 0, 1, 1], &[0.0; 4]);
        let cols = FeatureColumns::new(x.view());
        let node = NodeSamples::root(&cols);
        let params = no_min_hessian().split_params();
        let s = best_split(&cols, &node, &g, &h, &params).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 1.5);
        // G_L = 1, H_L = 0.5, G_R = -1, H_R = 0.5, λ = 1
        let expected = 0.5 * (1.0 / 1.5 + 1.0 / 1.5 - 0.0 / 3.0);
        assert!((s.gain - expected).abs() < 1e-12);
        assert!((s.gain - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn pure_node_and_large_gamma_give_no_split() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let cols = FeatureColumns::new(x.view());
        let node = NodeSamples::root(&cols);
        let (g, h) = logistic_grad_hess(&[1, 1, 1, 1], &[0.0; 4]);
        assert!(best_split(&cols, &node, &g, &h, &no_min_hessian().split_params()).is_none());
        let (g, h) = logistic_grad_hess(&[0, 0, 1, 1], &[0.0; 4]);
        let mut params = no_min_hessian().split_params();
        params.gamma = 0.7;
        assert!(best_split(&cols, &node, &g, &h, &params).is_none());
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // Columns 0 and 1 are identical; column 1 must not win.
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let cols = FeatureColumns::new(x.view());
        let (g, h) = logistic_grad_hess(&[0, 0, 1, 1], &[0.0; 4]);
        let s = best_split(&cols, &NodeSamples::root(&cols), &g, &h, &no_min_hessian().split_params()).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn min_child_hessian_blocks_small_children() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let cols = FeatureColumns::new(x.view());
        let (g, h) = logistic_grad_hess(&[0, 0, 1, 1], &[0.0; 4]);
        // every child would carry H = 0.5 at most on one side
        assert!(best_split(&cols, &NodeSamples::root(&cols), &g, &h, &GbtConfig::default().split_params()).is_none());
    }

    #[test]
    fn forced_leaves_take_newton_step() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let cols = FeatureColumns::new(x.view());
        let cfg = GbtConfig { max_depth: 1, ..no_min_hessian() };
        let forced = GbtConfig { gamma: 10.0, ..cfg.clone() };
        let (g, h) = logistic_grad_hess(&[1, 1, 0, 0], &[0.0; 4]);
        assert_eq!(fit_tree(&cols, &g, &h, &forced), TreeNode::Leaf { weight: 0.0 });
        let (g, h) = logistic_grad_hess(&[1, 1, 1, 0], &[0.0; 4]);
        assert_eq!(fit_tree(&cols, &g, &h, &forced), TreeNode::Leaf { weight: 0.5 });
        // pure node: single leaf at −G/(H+λ) = 2 / 2
        let (g, h) = logistic_grad_hess(&[1, 1, 1, 1], &[0.0; 4]);
        assert_eq!(fit_tree(&cols, &g, &h, &cfg), TreeNode::Leaf { weight: 1.0 });
    }

    #[test]
    fn separable_data_loss_drops() {
        let x = Array2::from_shape_fn((8, 1), |(r, _)| r as f64);
        let y = [0, 0, 0, 0, 1, 1, 1, 1];
        let cfg = GbtConfig { num_trees: 5, ..no_min_hessian() };
        let (e, losses) = fit_ensemble_traced(x.view(), &y, &cfg).unwrap();
        assert!((losses[0] - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(*losses.last().unwrap() < losses[0]);
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        let p = predict_proba(&e, x.view()).unwrap();
        assert!(p[..4].iter().all(|&a| p[4..].iter().all(|&b| a < b)));
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn single_round_is_scaled_tree() {
        let x = Array2::from_shape_fn((10, 2), |(r, c)| ((r * 7 + c * 3) % 10) as f64);
        let y = [0, 1, 0, 1, 1, 0, 0, 1, 1, 1];
        let cfg = GbtConfig { num_trees: 1, ..no_min_hessian() };
        let e = fit_ensemble(x.view(), &y, &cfg).unwrap();
        let (g, h) = logistic_grad_hess(&y, &[0.0; 10]);
        let tree = fit_tree(&FeatureColumns::new(x.view()), &g, &h, &cfg);
        assert_eq!(e.trees()[0], tree);
        let logits = predict_logit(&e, x.view()).unwrap();
        for (z, row) in logits.iter().zip(x.rows()) {
            assert_eq!(*z, 0.3 * tree.predict_row(row));
        }
    }

    #[test]
    fn row_permutation_permutes_predictions() {
        let x = Array2::from_shape_fn((12, 3), |(r, c)| ((r * 5 + c * 11) % 13) as f64 / 13.0);
        let y: Vec<u8> = (0..12).map(|i| (i % 3 == 0) as u8).collect();
        let e = fit_ensemble(x.view(), &y, &no_min_hessian()).unwrap();
        let p = predict_proba(&e, x.view()).unwrap();
        let perm: Vec<usize> = (0..12).rev().collect();
        let xp = x.select(ndarray::Axis(0), &perm);
        let pp = predict_proba(&e, xp.view()).unwrap();
        for (i, &r) in perm.iter().enumerate() {
            assert_eq!(pp[i], p[r]);
        }
        assert!(predict_proba(&e, Array2::zeros((2, 2)).view()).is_err());
    }

    #[test]
    fn leaf_only_ensemble() {
        let e = GbtEnsemble::new(vec![TreeNode::Leaf { weight: 0.0 }; 3], 0.3, 0.0, 4).unwrap();
        assert!(used_features(&e).is_err());
        let p = predict_proba(&e, Array2::zeros((3, 4)).view()).unwrap();
        assert_eq!(p, vec![0.5; 3]);
    }

    #[test]
    fn used_features_single_split() {
        let stump = TreeNode::Internal {
            feature: 7,
            threshold: 0.5,
            left: Box::new(TreeNode::Leaf { weight: -1.0 }),
            right: Box::new(TreeNode::Leaf { weight: 1.0 }),
        };
        let e = GbtEnsemble::new(vec![stump], 0.3, 0.0, 10).unwrap();
        assert_eq!(used_features(&e).unwrap(), vec![7]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let x = Array2::from_shape_fn((30, 4), |(r, c)| ((r * 13 + c * 7) % 17) as f64 / 3.0 + 0.1);
        let y: Vec<u8> = (0..30).map(|i| ((i * 7) % 5 < 2) as u8).collect();
        let e = fit_ensemble(x.view(), &y, &GbtConfig { num_trees: 4, ..no_min_hessian() }).unwrap();
        let json = e.to_json();
        assert!(json.contains("\"threshold\":\""));
        assert_eq!(GbtEnsemble::from_json(&json).unwrap(), e);
    }

    #[test]
    fn single_class_rejected() {
        let x = Array2::zeros((5, 1));
        assert!(fit_ensemble(x.view(), &[1, 1, 1, 1, 1], &GbtConfig::default()).is_err());
    }
}

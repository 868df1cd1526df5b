#![allow(dead_code)]

use motgnn::nn::{
    finite_diff_grad, l2_penalty, max_relative_error, relu, relu_backward, softmax2_bce, BatchNorm, Dense,
    MaskedDense,
};
use motgnn::rng::{seeded, Rng};
use ndarray::{Array1, Array2, ArrayD};
use rand::Rng as _;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const INSTANCES: u64 = 50;

fn uniform(rng: &mut Rng, shape: (usize, usize), scale: f64) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| rng.random_range(-scale..scale))
}

fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn reshape(v: &[f64], shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_vec(shape, v.to_vec()).unwrap()
}

/// Symmetric 0/1 mask with unit diagonal.
pub fn random_mask(rng: &mut Rng, p: usize, density: f64) -> Array2<f64> {
    let mut m = Array2::eye(p);
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() < density {
                m[[i, j]] = 1.0;
                m[[j, i]] = 1.0;
            }
        }
    }
    m
}

/// Largest relative error over all gradients of one random masked-layer
/// instance under the loss `Σ R ⊙ y`.
pub fn masked_dense_case(seed: u64) -> f64 {
    let mut rng = seeded(seed, 1001);
    let p = rng.random_range(1..=12);
    let n = rng.random_range(1..=8);
    let mask = random_mask(&mut rng, p, 0.3);
    let w = uniform(&mut rng, (p, p), 1.0);
    let b: Array1<f64> = Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0));
    let x = uniform(&mut rng, (n, p), 1.0);
    let r = uniform(&mut rng, (n, p), 1.0);
    let layer = MaskedDense::new(w, b.clone(), mask.clone()).unwrap();
    let g = layer.backward(x.view(), r.view()).unwrap();
    let loss = |l: &MaskedDense, x: &Array2<f64>| (l.forward(x.view()).unwrap() * &r).sum();

    let active: Vec<(usize, usize)> = layer.active().to_vec();
    let w0: Vec<f64> = active.iter().map(|&(i, j)| layer.weight()[[i, j]]).collect();
    let num_w = finite_diff_grad(
        |v| {
            let mut w = layer.weight().clone();
            for (&(i, j), &val) in active.iter().zip(v) {
                w[[i, j]] = val;
            }
            loss(&MaskedDense::new(w, b.clone(), mask.clone()).unwrap(), &x)
        },
        &w0,
        H,
    );
    let ana_w: Vec<f64> = active.iter().map(|&(i, j)| g.weight[[i, j]]).collect();
    let num_b = finite_diff_grad(
        |v| {
            let l = MaskedDense::new(layer.weight().clone(), Array1::from(v.to_vec()), mask.clone()).unwrap();
            loss(&l, &x)
        },
        &b.to_vec(),
        H,
    );
    let num_x = finite_diff_grad(|v| loss(&layer, &reshape(v, (n, p))), &flat(&x), H);
    max_relative_error(&ana_w, &num_w)
        .max(max_relative_error(&g.bias.to_vec(), &num_b))
        .max(max_relative_error(&flat(&g.input), &num_x))
}

pub fn dense_case(seed: u64) -> f64 {
    let mut rng = seeded(seed, 1002);
    let i = rng.random_range(1..=20);
    let o = rng.random_range(1..=20);
    let n = rng.random_range(1..=8);
    let w = uniform(&mut rng, (i, o), 1.0);
    let b: Array1<f64> = Array1::from_shape_fn(o, |_| rng.random_range(-1.0..1.0));
    let x = uniform(&mut rng, (n, i), 1.0);
    let r = uniform(&mut rng, (n, o), 1.0);
    let layer = Dense::new(w.clone(), b.clone()).unwrap();
    let g = layer.backward(x.view(), r.view()).unwrap();
    let loss = |l: &Dense, x: &Array2<f64>| (l.forward(x.view()).unwrap() * &r).sum();
    let num_w = finite_diff_grad(
        |v| loss(&Dense::new(reshape(v, (i, o)), b.clone()).unwrap(), &x),
        &flat(&w),
        H,
    );
    let num_b = finite_diff_grad(
        |v| loss(&Dense::new(w.clone(), Array1::from(v.to_vec())).unwrap(), &x),
        &b.to_vec(),
        H,
    );
    let num_x = finite_diff_grad(|v| loss(&layer, &reshape(v, (n, i))), &flat(&x), H);
    max_relative_error(&flat(&g.weight), &num_w)
        .max(max_relative_error(&g.bias.to_vec(), &num_b))
        .max(max_relative_error(&flat(&g.input), &num_x))
}

pub fn relu_case(seed: u64) -> f64 {
    let mut rng = seeded(seed, 1003);
    let shape = (rng.random_range(1..=20), rng.random_range(1..=20));
    // keep clear of the kink so central differences are valid
    let x = Array2::from_shape_fn(shape, |_| {
        let v: f64 = rng.random_range(0.1..2.0);
        if rng.random::<bool>() {
            v
        } else {
            -v
        }
    });
    let r = uniform(&mut rng, shape, 1.0);
    let ana = relu_backward(&x, &r);
    let num = finite_diff_grad(|v| (relu(&reshape(v, shape)) * &r).sum(), &flat(&x), H);
    max_relative_error(&flat(&ana), &num)
}

pub fn batchnorm_case(seed: u64) -> f64 {
    let mut rng = seeded(seed, 1004);
    let n = rng.random_range(2..=16);
    let w = rng.random_range(1..=12);
    let x = uniform(&mut rng, (n, w), 2.0);
    let r = uniform(&mut rng, (n, w), 1.0);
    let mut bn = BatchNorm::new(w);
    bn.gamma = Array1::from_shape_fn(w, |_| rng.random_range(0.5..1.5));
    bn.beta = Array1::from_shape_fn(w, |_| rng.random_range(-0.5..0.5));
    let (_, cache) = bn.forward_train(&x).unwrap();
    let (dx, dgamma, dbeta) = bn.backward(&cache, &r);
    let loss = |bn: &BatchNorm, x: &Array2<f64>| (bn.forward_train(x).unwrap().0 * &r).sum();
    let num_x = finite_diff_grad(|v| loss(&bn, &reshape(v, (n, w))), &flat(&x), H);
    let num_g = finite_diff_grad(
        |v| {
            let mut b = bn.clone();
            b.gamma = Array1::from(v.to_vec());
            loss(&b, &x)
        },
        &bn.gamma.to_vec(),
        H,
    );
    let num_b = finite_diff_grad(
        |v| {
            let mut b = bn.clone();
            b.beta = Array1::from(v.to_vec());
            loss(&b, &x)
        },
        &bn.beta.to_vec(),
        H,
    );
    max_relative_error(&flat(&dx), &num_x)
        .max(max_relative_error(&dgamma.to_vec(), &num_g))
        .max(max_relative_error(&dbeta.to_vec(), &num_b))
}

pub fn softmax_bce_case(seed: u64) -> f64 {
    let mut rng = seeded(seed, 1005);
    let n = rng.random_range(1..=20);
    let logits = uniform(&mut rng, (n, 2), 4.0);
    let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let (_, g) = softmax2_bce(&logits, &y);
    let num = finite_diff_grad(|v| softmax2_bce(&reshape(v, (n, 2)), &y).0, &flat(&logits), H);
    max_relative_error(&flat(&g), &num)
}

pub fn l2_case(seed: u64) -> f64 {
    let mut rng = seeded(seed, 1006);
    let lambda = rng.random_range(1e-3..1.0);
    let shapes: Vec<(usize, usize)> = (0..rng.random_range(1..=3))
        .map(|_| (rng.random_range(1..=20), rng.random_range(1..=20)))
        .collect();
    let ws: Vec<ArrayD<f64>> = shapes.iter().map(|&s| uniform(&mut rng, s, 2.0).into_dyn()).collect();
    let views: Vec<_> = ws.iter().map(|w| w.view()).collect();
    let (_, grads) = l2_penalty(&views, lambda);
    let sizes: Vec<usize> = ws.iter().map(|w| w.len()).collect();
    let all: Vec<f64> = ws.iter().flat_map(|w| w.iter().copied()).collect();
    let num = finite_diff_grad(
        |v| {
            let mut parts = Vec::new();
            let mut off = 0;
            for (&sz, w) in sizes.iter().zip(&ws) {
                parts.push(ArrayD::from_shape_vec(w.raw_dim(), v[off..off + sz].to_vec()).unwrap());
                off += sz;
            }
            let views: Vec<_> = parts.iter().map(|w| w.view()).collect();
            l2_penalty(&views, lambda).0
        },
        &all,
        H,
    );
    let ana: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
    max_relative_error(&ana, &num)
}

pub type GradCase = (&'static str, fn(u64) -> f64);

pub const GRAD_CASES: [GradCase; 6] = [
    ("masked dense", masked_dense_case),
    ("dense", dense_case),
    ("relu", relu_case),
    ("batchnorm", batchnorm_case),
    ("softmax-bce", softmax_bce_case),
    ("l2", l2_case),
];

/// Worst relative error over [`INSTANCES`] random instances of one case.
pub fn worst_error(case: fn(u64) -> f64) -> f64 {
    (0..INSTANCES).map(case).fold(0.0, f64::max)
}

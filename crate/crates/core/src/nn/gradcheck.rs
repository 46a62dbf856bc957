//! Central finite-difference verification of every layer's backward pass,
//! run in f64 on small seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::layers::{
    conv2d, conv2d_backward, dense, dense_backward_t, leaky_relu, leaky_relu_backward, maxpool2d, maxpool2d_backward,
    softmax_cross_entropy,
};
use super::model::{Network, INPUT_SIZE};
use super::{ModelSpec, Tensor};
use crate::error::Result;

pub const STEP: f64 = 1e-3;
/// Probe step for the end-to-end check. A 1e-3 nudge to a conv1 weight moves
/// a thousand pre-activations, and some of them cross a kink.
pub const NETWORK_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct LayerCheck {
    pub layer: &'static str,
    pub instances: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
}

impl LayerCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

/// `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central difference of `f` at every coordinate of `x`.
pub fn numeric_grad(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + STEP;
            let up = f(&probe);
            probe[i] = x[i] - STEP;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn max_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic.iter().zip(numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max)
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn tensor(shape: Vec<usize>, data: Vec<f64>) -> Tensor<f64> {
    Tensor::new(shape, data).expect("shape matches data")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Tally {
    layer: &'static str,
    instances: usize,
    coordinates: usize,
    max_rel_error: f64,
}

impl Tally {
    fn new(layer: &'static str) -> Self {
        Self { layer, instances: 0, coordinates: 0, max_rel_error: 0.0 }
    }

    fn add(&mut self, analytic: &[f64], numeric: &[f64]) {
        self.coordinates += analytic.len();
        self.max_rel_error = self.max_rel_error.max(max_error(analytic, numeric));
    }

    fn finish(self) -> LayerCheck {
        LayerCheck {
            layer: self.layer,
            instances: self.instances,
            coordinates: self.coordinates,
            max_rel_error: self.max_rel_error,
        }
    }
}

/// Loss `⟨r, conv(x, k, b)⟩`, checked against x, k and b.
fn check_conv(layer: &'static str, k: usize, instances: usize, seed: u64) -> Result<LayerCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new(layer);
    let pad = (k - 1) / 2;
    for _ in 0..instances {
        let (ci, co) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let (h, w) = (rng.random_range(3..=8), rng.random_range(3..=8));
        let x = uniform(&mut rng, ci * h * w, 1.0);
        let kern = uniform(&mut rng, co * ci * k * k, 0.5);
        let bias = uniform(&mut rng, co, 0.5);
        let r = uniform(&mut rng, co * h * w, 1.0);
        let loss = |x: &[f64], kern: &[f64], bias: &[f64]| -> f64 {
            let y = conv2d(
                &tensor(vec![ci, h, w], x.to_vec()),
                &tensor(vec![co, ci, k, k], kern.to_vec()),
                &tensor(vec![co], bias.to_vec()),
                pad,
            )
            .expect("valid conv geometry");
            dot(y.data(), &r)
        };
        let g = conv2d_backward(&tensor(vec![ci, h, w], x.clone()), &tensor(vec![co, ci, k, k], kern.clone()), pad, &tensor(vec![co, h, w], r.clone()))?;
        tally.add(g.input.data(), &numeric_grad(&x, |v| loss(v, &kern, &bias)));
        tally.add(g.kernels.data(), &numeric_grad(&kern, |v| loss(&x, v, &bias)));
        tally.add(g.bias.data(), &numeric_grad(&bias, |v| loss(&x, &kern, v)));
        tally.instances += 1;
    }
    Ok(tally.finish())
}

fn check_dense(instances: usize, seed: u64) -> Result<LayerCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("dense");
    for _ in 0..instances {
        let (i, o) = (rng.random_range(1..=12), rng.random_range(1..=6));
        let x = uniform(&mut rng, i, 1.0);
        let wt = uniform(&mut rng, o * i, 0.5);
        let b = uniform(&mut rng, o, 0.5);
        let r = uniform(&mut rng, o, 1.0);
        let loss = |x: &[f64], wt: &[f64], b: &[f64]| -> f64 {
            let y = dense(&tensor(vec![i], x.to_vec()), &tensor(vec![o, i], wt.to_vec()), &tensor(vec![o], b.to_vec()))
                .expect("valid dense geometry");
            dot(y.data(), &r)
        };
        let g = dense_backward_t(&tensor(vec![i], x.clone()), &tensor(vec![o, i], wt.clone()), &tensor(vec![o], r.clone()))?;
        tally.add(g.input.data(), &numeric_grad(&x, |v| loss(v, &wt, &b)));
        tally.add(g.weights.data(), &numeric_grad(&wt, |v| loss(&x, v, &b)));
        tally.add(g.bias.data(), &numeric_grad(&b, |v| loss(&x, &wt, v)));
        tally.instances += 1;
    }
    Ok(tally.finish())
}

/// Inputs keep a margin of 0.05 from the kink at zero.
fn check_leaky(alpha: f64, instances: usize, seed: u64) -> Result<LayerCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("leaky_relu");
    for _ in 0..instances {
        let shape = vec![rng.random_range(1..=3), rng.random_range(1..=5), rng.random_range(1..=5)];
        let n: usize = shape.iter().product();
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let m = rng.random_range(0.05..1.0);
                if rng.random_bool(0.5) { m } else { -m }
            })
            .collect();
        let r = uniform(&mut rng, n, 1.0);
        let g = leaky_relu_backward(&tensor(shape.clone(), x.clone()), alpha, &tensor(shape.clone(), r.clone()))?;
        let num = numeric_grad(&x, |v| dot(leaky_relu(&tensor(shape.clone(), v.to_vec()), alpha).data(), &r));
        tally.add(g.data(), &num);
        tally.instances += 1;
    }
    Ok(tally.finish())
}

/// Inputs are a shuffled grid with spacing 0.01, so no window has a
/// near-tie within the probe step.
fn check_maxpool(instances: usize, seed: u64) -> Result<LayerCheck> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("maxpool2d");
    for _ in 0..instances {
        let shape = vec![rng.random_range(1..=3), 2 * rng.random_range(1..=4), 2 * rng.random_range(1..=4)];
        let n: usize = shape.iter().product();
        let mut x: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 - 0.5).collect();
        x.shuffle(&mut rng);
        let (out, argmax) = maxpool2d(&tensor(shape.clone(), x.clone()))?;
        let r = uniform(&mut rng, out.len(), 1.0);
        let g = maxpool2d_backward(&shape, &argmax, &tensor(out.shape().to_vec(), r.clone()))?;
        let num = numeric_grad(&x, |v| dot(maxpool2d(&tensor(shape.clone(), v.to_vec())).expect("even dims").0.data(), &r));
        tally.add(g.data(), &num);
        tally.instances += 1;
    }
    Ok(tally.finish())
}

fn check_softmax_ce(instances: usize, seed: u64) -> Result<LayerCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("softmax_cross_entropy");
    for _ in 0..instances {
        let n = rng.random_range(2..=6);
        let z = uniform(&mut rng, n, 3.0);
        let label = rng.random_range(0..n);
        let (_, g) = softmax_cross_entropy(&z, label);
        tally.add(&g, &numeric_grad(&z, |v| softmax_cross_entropy(v, label).0));
        tally.instances += 1;
    }
    Ok(tally.finish())
}

/// End-to-end check through a narrow network: `coords` random coordinates
/// per parameter tensor per instance.
fn check_network(instances: usize, coords: usize, seed: u64) -> Result<LayerCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ModelSpec { c1: 2, c2: 3, c3: 2, c4: 2, fc: 6, classes: 5, alpha: 0.01 };
    let mut tally = Tally::new("network");
    for _ in 0..instances {
        let params = super::init_params(&spec, rng.random())?;
        let buffers: Vec<Vec<f64>> = params.tensors.iter().map(|(_, t)| t.data().iter().map(|&v| f64::from(v)).collect()).collect();
        let image = uniform(&mut rng, INPUT_SIZE * INPUT_SIZE, 1.0);
        let label = rng.random_range(0..spec.classes);
        let net = Network::new(&spec, &buffers)?;
        let (_, _, grads) = net.loss_and_grad(&image, label);
        for (t, buf) in buffers.iter().enumerate() {
            let mut analytic = Vec::new();
            let mut numeric = Vec::new();
            for _ in 0..coords {
                let i = rng.random_range(0..buf.len());
                let loss_at = |v: f64| {
                    let mut probe = buffers.clone();
                    probe[t][i] = v;
                    let net = Network::new(&spec, &probe).expect("same layout");
                    net.loss_and_grad(&image, label).0
                };
                analytic.push(grads[t][i]);
                numeric.push((loss_at(buf[i] + NETWORK_STEP) - loss_at(buf[i] - NETWORK_STEP)) / (2.0 * NETWORK_STEP));
            }
            tally.add(&analytic, &numeric);
        }
        tally.instances += 1;
    }
    Ok(tally.finish())
}

/// Runs every layer check with `instances` random instances each.
pub fn check_all_layers(instances: usize, seed: u64) -> Result<Vec<LayerCheck>> {
    Ok(vec![
        check_conv("conv2d_k7", 7, instances, seed)?,
        check_conv("conv2d_k5", 5, instances, seed ^ 1)?,
        check_leaky(0.01, instances, seed ^ 2)?,
        check_maxpool(instances, seed ^ 3)?,
        check_dense(instances, seed ^ 4)?,
        check_softmax_ce(instances, seed ^ 5)?,
        check_network(instances, 2, seed ^ 6)?,
    ])
}

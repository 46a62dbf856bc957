//! The GAF classifier: four convolutions, two pools, two dense layers.
//!
//! ```text
//! 1×32×32 → conv7 → C1×32×32 → pool → C1×16×16 → conv5 → C2×16×16
//!         → conv5 → C3×16×16 → conv5 → C4×16×16 → pool → C4×8×8
//!         → flatten → fc (128) → fc (5)
//! ```
//! Every convolution and the hidden dense layer are followed by LeakyReLU.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::{
    col2im, conv_backward_cols, conv_forward_cols, dense_backward, dense_forward, im2col, leaky_backward_inplace, leaky_forward,
    maxpool_backward, maxpool_forward, softmax_cross_entropy,
};
use super::{ModelParams, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::gaf::GafImage;

pub const INPUT_SIZE: usize = 32;
const MID: usize = INPUT_SIZE / 2;
const POOLED: usize = INPUT_SIZE / 4;
const K_FIRST: usize = 7;
const K_REST: usize = 5;

/// Samples per gradient work unit. The reduction over units always runs in
/// unit order, so results do not depend on the thread count.
const GRAD_CHUNK: usize = 8;

fn default_classes() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub c1: usize,
    pub c2: usize,
    pub c3: usize,
    pub c4: usize,
    pub fc: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    pub alpha: f32,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { c1: 8, c2: 16, c3: 16, c4: 16, fc: 128, classes: 5, alpha: 0.01 }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if [self.c1, self.c2, self.c3, self.c4, self.fc].contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.classes != 5 {
            return Err(Error::Config(format!("the classifier has 5 outputs, got {}", self.classes)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("LeakyReLU slope must be in [0, 1), got {}", self.alpha)));
        }
        let widths = [self.c1, self.c2, self.c3, self.c4, self.fc, self.classes];
        if widths.iter().any(|&w| w > usize::from(u16::MAX)) {
            return Err(Error::Config("layer widths must fit in u16".into()));
        }
        Ok(())
    }

    pub fn flatten_len(&self) -> usize {
        self.c4 * POOLED * POOLED
    }

    /// Canonical (name, shape) list; serialization order depends on it.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let conv = |name: &str, co, ci, k| {
            [(format!("{name}.weight"), vec![co, ci, k, k]), (format!("{name}.bias"), vec![co])]
        };
        let fc = |name: &str, o, i| [(format!("{name}.weight"), vec![o, i]), (format!("{name}.bias"), vec![o])];
        let mut out = Vec::with_capacity(12);
        out.extend(conv("conv1", self.c1, 1, K_FIRST));
        out.extend(conv("conv2", self.c2, self.c1, K_REST));
        out.extend(conv("conv3", self.c3, self.c2, K_REST));
        out.extend(conv("conv4", self.c4, self.c3, K_REST));
        out.extend(fc("fc1", self.fc, self.flatten_len()));
        out.extend(fc("fc2", self.classes, self.fc));
        out
    }

    pub fn check_params(&self, params: &ModelParams) -> Result<()> {
        let shapes = self.param_shapes();
        if shapes.len() != params.tensors.len()
            || shapes.iter().zip(&params.tensors).any(|((n, s), (pn, t))| n != pn || s.as_slice() != t.shape())
        {
            return Err(Error::Shape("parameters do not match the model spec".into()));
        }
        Ok(())
    }
}

pub fn param_count(spec: &ModelSpec) -> usize {
    spec.param_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
}

/// He-uniform weights (limit `√(6 / fan_in)`) and zero biases.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = Vec::new();
    for (name, shape) in spec.param_shapes() {
        let len: usize = shape.iter().product();
        let data = if name.ends_with(".bias") {
            vec![0.0; len]
        } else {
            let fan_in: usize = shape[1..].iter().product();
            let limit = (6.0 / fan_in as f64).sqrt() as f32;
            let dist = Uniform::new_inclusive(-limit, limit).map_err(|e| Error::Config(e.to_string()))?;
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        };
        tensors.push((name, Tensor::new(shape, data)?));
    }
    Ok(ModelParams::new(tensors))
}

/// Borrowed view over the twelve parameter buffers in canonical order.
pub struct Network<'a, T> {
    spec: ModelSpec,
    p: [&'a [T]; 12],
}

/// Everything the backward pass needs from one forward pass.
pub struct Activations<T> {
    col1: Vec<T>,
    z1: Vec<T>,
    idx1: Vec<usize>,
    col2: Vec<T>,
    z2: Vec<T>,
    col3: Vec<T>,
    z3: Vec<T>,
    col4: Vec<T>,
    z4: Vec<T>,
    p4: Vec<T>,
    idx4: Vec<usize>,
    h_pre: Vec<T>,
    h: Vec<T>,
    pub logits: Vec<T>,
}

impl<'a, T: Scalar> Network<'a, T> {
    pub fn new(spec: &ModelSpec, buffers: &'a [impl AsRef<[T]>]) -> Result<Self> {
        let shapes = spec.param_shapes();
        if buffers.len() != shapes.len() {
            return Err(Error::Shape(format!("expected {} parameter buffers, got {}", shapes.len(), buffers.len())));
        }
        for ((name, shape), buf) in shapes.iter().zip(buffers) {
            let len: usize = shape.iter().product();
            if buf.as_ref().len() != len {
                return Err(Error::Shape(format!("{name}: expected {len} values, got {}", buf.as_ref().len())));
            }
        }
        let p = std::array::from_fn(|i| buffers[i].as_ref());
        Ok(Self { spec: *spec, p })
    }

    pub fn forward(&self, image: &[T]) -> Activations<T> {
        let s = &self.spec;
        let alpha = T::from_f32(s.alpha).unwrap();
        let (big, mid) = (INPUT_SIZE * INPUT_SIZE, MID * MID);
        let (k1, k2, k3, k4) = (K_FIRST * K_FIRST, s.c1 * K_REST * K_REST, s.c2 * K_REST * K_REST, s.c3 * K_REST * K_REST);

        let mut col1 = vec![T::zero(); k1 * big];
        im2col(image, 1, INPUT_SIZE, INPUT_SIZE, K_FIRST, K_FIRST / 2, &mut col1);
        let mut z1 = vec![T::zero(); s.c1 * big];
        conv_forward_cols(&col1, self.p[0], self.p[1], s.c1, k1, big, &mut z1);
        let mut a1 = vec![T::zero(); z1.len()];
        leaky_forward(&z1, alpha, &mut a1);
        let mut p1 = vec![T::zero(); s.c1 * mid];
        let mut idx1 = vec![0; p1.len()];
        maxpool_forward(&a1, s.c1, INPUT_SIZE, INPUT_SIZE, &mut p1, &mut idx1);

        let conv = |input: &[T], ci: usize, co: usize, kk: usize, w: &[T], b: &[T]| {
            let mut col = vec![T::zero(); kk * mid];
            im2col(input, ci, MID, MID, K_REST, K_REST / 2, &mut col);
            let mut z = vec![T::zero(); co * mid];
            conv_forward_cols(&col, w, b, co, kk, mid, &mut z);
            let mut a = vec![T::zero(); z.len()];
            leaky_forward(&z, alpha, &mut a);
            (col, z, a)
        };
        let (col2, z2, a2) = conv(&p1, s.c1, s.c2, k2, self.p[2], self.p[3]);
        let (col3, z3, a3) = conv(&a2, s.c2, s.c3, k3, self.p[4], self.p[5]);
        let (col4, z4, a4) = conv(&a3, s.c3, s.c4, k4, self.p[6], self.p[7]);

        let mut p4 = vec![T::zero(); s.flatten_len()];
        let mut idx4 = vec![0; p4.len()];
        maxpool_forward(&a4, s.c4, MID, MID, &mut p4, &mut idx4);

        let mut h_pre = vec![T::zero(); s.fc];
        dense_forward(&p4, self.p[8], self.p[9], &mut h_pre);
        let mut h = vec![T::zero(); s.fc];
        leaky_forward(&h_pre, alpha, &mut h);
        let mut logits = vec![T::zero(); s.classes];
        dense_forward(&h, self.p[10], self.p[11], &mut logits);

        Activations { col1, z1, idx1, col2, z2, col3, z3, col4, z4, p4, idx4, h_pre, h, logits }
    }

    /// Accumulates parameter gradients for upstream gradient `d_logits`
    /// into `grads` (canonical order).
    pub fn backward(&self, acts: &Activations<T>, d_logits: &[T], grads: &mut [Vec<T>]) {
        let s = &self.spec;
        let alpha = T::from_f32(s.alpha).unwrap();
        let (big, mid) = (INPUT_SIZE * INPUT_SIZE, MID * MID);
        let (k1, k2, k3, k4) = (K_FIRST * K_FIRST, s.c1 * K_REST * K_REST, s.c2 * K_REST * K_REST, s.c3 * K_REST * K_REST);
        let [g0, g1, g2, g3, g4, g5, g6, g7, g8, g9, g10, g11] = grads else {
            panic!("backward needs 12 gradient buffers");
        };

        let mut dh = vec![T::zero(); s.fc];
        dense_backward(&acts.h, self.p[10], d_logits, g10, g11, Some(&mut dh));
        leaky_backward_inplace(&acts.h_pre, alpha, &mut dh);
        let mut dp4 = vec![T::zero(); acts.p4.len()];
        dense_backward(&acts.p4, self.p[8], &dh, g8, g9, Some(&mut dp4));

        let mut dz4 = vec![T::zero(); s.c4 * mid];
        maxpool_backward(&dp4, &acts.idx4, &mut dz4);
        leaky_backward_inplace(&acts.z4, alpha, &mut dz4);

        let conv_back = |col: &[T], w: &[T], dz: &[T], co, ci, kk, gw: &mut [T], gb: &mut [T]| {
            let mut dcol = vec![T::zero(); kk * mid];
            conv_backward_cols(col, w, dz, co, kk, mid, gw, gb, Some(&mut dcol));
            let mut d_in = vec![T::zero(); ci * mid];
            col2im(&dcol, ci, MID, MID, K_REST, K_REST / 2, &mut d_in);
            d_in
        };
        let mut dz3 = conv_back(&acts.col4, self.p[6], &dz4, s.c4, s.c3, k4, g6, g7);
        leaky_backward_inplace(&acts.z3, alpha, &mut dz3);
        let mut dz2 = conv_back(&acts.col3, self.p[4], &dz3, s.c3, s.c2, k3, g4, g5);
        leaky_backward_inplace(&acts.z2, alpha, &mut dz2);
        let dp1 = conv_back(&acts.col2, self.p[2], &dz2, s.c2, s.c1, k2, g2, g3);

        let mut dz1 = vec![T::zero(); s.c1 * big];
        maxpool_backward(&dp1, &acts.idx1, &mut dz1);
        leaky_backward_inplace(&acts.z1, alpha, &mut dz1);
        conv_backward_cols(&acts.col1, self.p[0], &dz1, s.c1, k1, big, g0, g1, None);
    }

    /// Loss, logits and parameter gradients for one labelled image.
    pub fn loss_and_grad(&self, image: &[T], label: usize) -> (T, Vec<T>, Vec<Vec<T>>) {
        let acts = self.forward(image);
        let (loss, d_logits) = softmax_cross_entropy(&acts.logits, label);
        let mut grads = self.zero_grads();
        self.backward(&acts, &d_logits, &mut grads);
        (loss, acts.logits, grads)
    }

    pub fn zero_grads(&self) -> Vec<Vec<T>> {
        self.p.iter().map(|b| vec![T::zero(); b.len()]).collect()
    }
}

fn param_buffers(params: &ModelParams) -> Vec<&[f32]> {
    params.tensors.iter().map(|(_, t)| t.data()).collect()
}

fn check_image(img: &GafImage) -> Result<()> {
    if img.size != INPUT_SIZE || img.pixels.len() != INPUT_SIZE * INPUT_SIZE {
        return Err(Error::Shape(format!("network input must be {INPUT_SIZE}×{INPUT_SIZE}, got {}", img.size)));
    }
    Ok(())
}

/// Index of the largest logit; ties resolve to the lowest index.
pub fn argmax(logits: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Logits for a batch, shape `(B, classes)`.
pub fn forward(params: &ModelParams, spec: &ModelSpec, images: &[GafImage]) -> Result<Tensor<f32>> {
    spec.check_params(params)?;
    images.iter().try_for_each(check_image)?;
    if images.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let buffers = param_buffers(params);
    let net = Network::new(spec, &buffers)?;
    let logits: Vec<Vec<f32>> = images.par_iter().map(|img| net.forward(&img.pixels).logits).collect();
    Tensor::new(vec![images.len(), spec.classes], logits.concat())
}

/// Summed loss, correct-prediction count and gradient of the *mean* loss
/// over `batch`.
pub struct BatchGrad {
    pub loss_sum: f64,
    pub correct: usize,
    pub grads: ModelParams,
}

pub fn batch_loss_grad(params: &ModelParams, spec: &ModelSpec, batch: &[&GafImage]) -> Result<BatchGrad> {
    spec.check_params(params)?;
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    batch.iter().try_for_each(|img| check_image(img))?;
    let buffers = param_buffers(params);
    let net = Network::new(spec, &buffers)?;

    let partials: Vec<(f64, usize, Vec<Vec<f32>>)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = net.zero_grads();
            let mut loss_sum = 0.0;
            let mut correct = 0;
            for img in chunk {
                let label = img.label.index();
                let acts = net.forward(&img.pixels);
                let (loss, d_logits) = softmax_cross_entropy(&acts.logits, label);
                net.backward(&acts, &d_logits, &mut grads);
                loss_sum += f64::from(loss);
                correct += usize::from(argmax(&acts.logits) == label);
            }
            (loss_sum, correct, grads)
        })
        .collect();

    let mut iter = partials.into_iter();
    let (mut loss_sum, mut correct, mut total) = iter.next().expect("non-empty batch");
    for (l, c, g) in iter {
        loss_sum += l;
        correct += c;
        for (acc, part) in total.iter_mut().zip(g) {
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p;
            }
        }
    }
    let scale = 1.0 / batch.len() as f32;
    let tensors = params
        .tensors
        .iter()
        .zip(total)
        .map(|((name, t), mut g)| {
            g.iter_mut().for_each(|v| *v *= scale);
            Ok((name.clone(), Tensor::new(t.shape().to_vec(), g)?))
        })
        .collect::<Result<_>>()?;
    Ok(BatchGrad { loss_sum, correct, grads: ModelParams::new(tensors) })
}

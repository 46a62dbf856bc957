use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, batch_loss_grad, AdamState, ModelParams, ModelSpec};
use crate::error::{Error, Result};
use crate::gaf::GafImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub mean_loss: f64,
    /// Fraction of samples classified correctly before each batch's update.
    pub accuracy: f64,
    pub steps: usize,
}

/// One seeded pass over `shard` in minibatches of `batch_size` (the last
/// batch may be short), one Adam step per batch.
pub fn train_epoch(
    params: &mut ModelParams,
    spec: &ModelSpec,
    state: &mut AdamState,
    shard: &[GafImage],
    batch_size: usize,
    seed: u64,
) -> Result<EpochMetrics> {
    if shard.is_empty() {
        return Err(Error::Config("cannot train on an empty shard".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..shard.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut loss_sum = 0.0;
    let mut correct = 0;
    let mut steps = 0;
    for idx in order.chunks(batch_size) {
        let batch: Vec<&GafImage> = idx.iter().map(|&i| &shard[i]).collect();
        let g = batch_loss_grad(params, spec, &batch)?;
        adam_step(params, &g.grads, state)?;
        loss_sum += g.loss_sum;
        correct += g.correct;
        steps += 1;
    }
    Ok(EpochMetrics {
        mean_loss: loss_sum / shard.len() as f64,
        accuracy: correct as f64 / shard.len() as f64,
        steps,
    })
}

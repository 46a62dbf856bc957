use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BeatRecord, DatasetManifest, SplitTag, NUM_CLASSES};
use crate::error::{Error, Result};

const SNAP: f64 = 1e-9;

/// Apportions `total` integer units according to the real-valued `exact`
/// quotas: floors first, then the leftover units to the largest fractional
/// remainders, ties toward the lower index.
pub fn largest_remainder(total: usize, exact: &[f64]) -> Vec<usize> {
    let mut counts = Vec::with_capacity(exact.len());
    let mut remainders = Vec::with_capacity(exact.len());
    for &q in exact {
        let rounded = q.round();
        let q = if (q - rounded).abs() < SNAP { rounded } else { q };
        let floor = q.floor().max(0.0);
        counts.push(floor as usize);
        remainders.push(q - floor);
    }
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]).then(a.cmp(&b)));
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn class_indices(beats: &[BeatRecord]) -> [Vec<usize>; NUM_CLASSES] {
    let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, beat) in beats.iter().enumerate() {
        by_class[beat.label.index()].push(i);
    }
    by_class
}

fn gather(beats: &[BeatRecord], mut picked: Vec<usize>) -> Vec<BeatRecord> {
    picked.sort_unstable();
    picked.into_iter().map(|i| beats[i].clone()).collect()
}

/// Stratified, seeded train/test split.
///
/// The number of training beats is `round(total * train_fraction)`, spread
/// over the classes by largest remainder. Beats keep their input order within
/// each side.
pub fn split_train_test(
    manifest: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let mut by_class = class_indices(&manifest.beats);
    if let Some(k) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "class {} has no beats; all five classes must be present",
            super::BeatLabel::ALL[k]
        )));
    }
    let total = manifest.len();
    let target = (total as f64 * train_fraction).round() as usize;
    let exact: Vec<f64> = by_class.iter().map(|c| c.len() as f64 * train_fraction).collect();
    let quotas = largest_remainder(target, &exact);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (indices, &quota) in by_class.iter_mut().zip(&quotas) {
        indices.shuffle(&mut rng);
        train.extend_from_slice(&indices[..quota]);
        test.extend_from_slice(&indices[quota..]);
    }

    let make = |picked, split| DatasetManifest {
        beats: gather(&manifest.beats, picked),
        split,
        shard: None,
        seed,
    };
    Ok((make(train, SplitTag::Train), make(test, SplitTag::Test)))
}

/// Stratified, seeded partition of a training manifest into client shards.
///
/// Within each class, beats are allotted to shards in proportion to `shares`
/// with largest-remainder rounding, so every beat lands in exactly one shard.
pub fn partition_clients(manifest: &DatasetManifest, shares: &[f64], seed: u64) -> Result<Vec<DatasetManifest>> {
    if shares.is_empty() {
        return Err(Error::Config("at least one share is required".into()));
    }
    if let Some(s) = shares.iter().find(|s| !s.is_finite() || **s <= 0.0) {
        return Err(Error::Config(format!("shares must be positive, got {s}")));
    }
    let sum: f64 = shares.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("shares must sum to 1, got {sum}")));
    }

    let mut by_class = class_indices(&manifest.beats);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<Vec<usize>> = vec![Vec::new(); shares.len()];
    for indices in by_class.iter_mut() {
        let exact: Vec<f64> = shares.iter().map(|s| indices.len() as f64 * s).collect();
        let counts = largest_remainder(indices.len(), &exact);
        indices.shuffle(&mut rng);
        let mut start = 0;
        for (shard, count) in counts.into_iter().enumerate() {
            picked[shard].extend_from_slice(&indices[start..start + count]);
            start += count;
        }
    }

    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(i, p)| DatasetManifest {
            beats: gather(&manifest.beats, p),
            split: manifest.split,
            shard: Some(i),
            seed,
        })
        .collect())
}

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{BeatLabel, BeatRecord, DatasetManifest, NUM_CLASSES};
use crate::error::{Error, Result};

/// Generator settings for the desk-scale synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub per_class: usize,
    pub window: usize,
    pub seed: u64,
    /// Noise standard deviation as a fraction of the amplitude.
    pub noise: f64,
    pub amplitude: f64,
    /// Class `k` oscillates at `base_cycles + k * cycle_step` cycles per window.
    pub base_cycles: f64,
    pub cycle_step: f64,
    /// Per-beat frequency offset drawn uniformly from `±cycle_jitter`.
    pub cycle_jitter: f64,
    /// Per-beat phase drawn uniformly from `[0, 2π · phase_jitter)`.
    pub phase_jitter: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            per_class: 200,
            window: 128,
            seed: 0,
            noise: 0.3,
            amplitude: 1.0,
            base_cycles: 1.0,
            cycle_step: 1.0,
            cycle_jitter: 0.3,
            phase_jitter: 1.0,
        }
    }
}

/// Five classes of noisy sinusoids with jittered frequency and phase,
/// grouped by class.
pub fn synth_dataset(num_classes: usize, opts: &SynthOptions) -> Result<DatasetManifest> {
    if num_classes != NUM_CLASSES {
        return Err(Error::Config(format!("synthetic data has exactly {NUM_CLASSES} classes")));
    }
    if opts.per_class == 0 || opts.window == 0 {
        return Err(Error::Config("per_class and window must be positive".into()));
    }
    let sigma = opts.noise * opts.amplitude;
    let noise = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut beats = Vec::with_capacity(num_classes * opts.per_class);
    for (k, label) in BeatLabel::ALL.into_iter().enumerate() {
        let cycles = opts.base_cycles + k as f64 * opts.cycle_step;
        for i in 0..opts.per_class {
            let f = cycles + if opts.cycle_jitter > 0.0 { rng.random_range(-opts.cycle_jitter..opts.cycle_jitter) } else { 0.0 };
            let phase = if opts.phase_jitter > 0.0 { rng.random_range(0.0..2.0 * PI * opts.phase_jitter) } else { 0.0 };
            let samples = (0..opts.window)
                .map(|t| {
                    let clean = opts.amplitude * (2.0 * PI * f * t as f64 / opts.window as f64 + phase).sin();
                    let jitter = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    (clean + jitter) as f32
                })
                .collect();
            beats.push(BeatRecord {
                samples,
                label,
                record_name: format!("synth-{label}"),
                r_peak_index: i as u32,
            });
        }
    }
    let mut m = DatasetManifest::new(beats);
    m.seed = opts.seed;
    Ok(m)
}

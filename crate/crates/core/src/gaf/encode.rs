use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{field_registry, rescale_minmax, resize_registry, GramianField, RescaleRange, ResizeStrategy};
use crate::error::{Error, Result};
use crate::ingest::{BeatLabel, BeatRecord, DatasetManifest};
use crate::registry::Registry;

/// One encoded beat, `size × size` pixels row-major in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GafImage {
    pub size: usize,
    pub pixels: Vec<f32>,
    pub label: BeatLabel,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    pub method: String,
    pub range: RescaleRange,
    pub resize: String,
    pub size: usize,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            method: "gasf".into(),
            range: RescaleRange::Symmetric,
            resize: "bilinear".into(),
            size: 32,
        }
    }
}

/// An [`EncodeConfig`] with its strategies resolved.
pub struct Encoder {
    cfg: EncodeConfig,
    fields: Registry<dyn GramianField>,
    resizers: Registry<dyn ResizeStrategy>,
}

impl Encoder {
    pub fn new(cfg: EncodeConfig) -> Result<Self> {
        Self::with_registries(cfg, field_registry(), resize_registry())
    }

    pub fn with_registries(
        cfg: EncodeConfig,
        fields: Registry<dyn GramianField>,
        resizers: Registry<dyn ResizeStrategy>,
    ) -> Result<Self> {
        if cfg.size < 2 {
            return Err(Error::Config(format!("output size must be at least 2, got {}", cfg.size)));
        }
        fields.get(&cfg.method)?;
        resizers.get(&cfg.resize)?;
        Ok(Self { cfg, fields, resizers })
    }

    pub fn config(&self) -> &EncodeConfig {
        &self.cfg
    }

    pub fn encode(&self, beat: &BeatRecord) -> Result<GafImage> {
        let x: Vec<f64> = beat.samples.iter().map(|&v| f64::from(v)).collect();
        let rescaled = rescale_minmax(&x, self.cfg.range)?;
        let field = self.fields.get(&self.cfg.method)?;
        let matrix = self.resizers.get(&self.cfg.resize)?.build(&rescaled, field, self.cfg.size)?;
        debug_assert_eq!(matrix.n, self.cfg.size);
        Ok(GafImage {
            size: matrix.n,
            pixels: matrix.data.iter().map(|&v| v as f32).collect(),
            label: beat.label,
            method: self.cfg.method.clone(),
        })
    }

    /// Encodes every beat, preserving manifest order.
    pub fn encode_all(&self, beats: &[BeatRecord]) -> Result<Vec<GafImage>> {
        beats.par_iter().map(|b| self.encode(b)).collect()
    }
}

pub fn encode_beat(beat: &BeatRecord, cfg: &EncodeConfig) -> Result<GafImage> {
    Encoder::new(cfg.clone())?.encode(beat)
}

pub fn encode_manifest(manifest: &DatasetManifest, cfg: &EncodeConfig) -> Result<Vec<GafImage>> {
    Encoder::new(cfg.clone())?.encode_all(&manifest.beats)
}

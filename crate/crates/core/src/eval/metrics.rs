use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaf::GafImage;
use crate::ingest::{BeatLabel, NUM_CLASSES};
use crate::nn::{argmax, forward, ModelParams, ModelSpec};

/// Rows are true classes, columns predictions, both in N, L, R, A, V order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        Self { counts }
    }

    pub fn record(&mut self, truth: BeatLabel, predicted: BeatLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    /// `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    pub fn per_class_accuracy(&self) -> [Option<f64>; NUM_CLASSES] {
        per_class_accuracy(self)
    }
}

/// Recall per true class; a class with no samples is `None`.
pub fn per_class_accuracy(m: &ConfusionMatrix) -> [Option<f64>; NUM_CLASSES] {
    std::array::from_fn(|k| {
        let row = m.row_sum(k);
        (row > 0).then(|| m.counts[k][k] as f64 / row as f64)
    })
}

const EVAL_CHUNK: usize = 512;

/// Confusion matrix and overall accuracy of `params` on `images`.
pub fn evaluate(params: &ModelParams, spec: &ModelSpec, images: &[GafImage]) -> Result<(ConfusionMatrix, f64)> {
    if images.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty test set".into()));
    }
    let mut m = ConfusionMatrix::new();
    for chunk in images.chunks(EVAL_CHUNK) {
        let logits = forward(params, spec, chunk)?;
        for (img, row) in chunk.iter().zip(logits.data().chunks(spec.classes)) {
            m.record(img.label, BeatLabel::from_index(argmax(row))?);
        }
    }
    let acc = m.accuracy().expect("non-empty test set");
    Ok((m, acc))
}

//! Gramian Angular Field encoding of 1D beats into square images.

mod encode;
mod fgim;
mod field;
mod paa;
mod rescale;
mod resize;

pub use encode::{encode_beat, encode_manifest, EncodeConfig, Encoder, GafImage};
pub use fgim::{decode_fgim, encode_fgim, read_fgim, write_fgim, FGIM_MAGIC, FGIM_VERSION};
pub use field::{field_registry, gadf, gasf, Gadf, Gasf, GramianField};
pub use paa::paa;
pub use rescale::{rescale_minmax, RescaleRange};
pub use resize::{resize_bilinear, resize_registry, BilinearImage, PaaFirst, ResizeStrategy};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self { n, data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

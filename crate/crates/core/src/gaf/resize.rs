use super::{paa, GramianField, Matrix};
use crate::error::Result;
use crate::registry::{Named, Registry};

/// Corner-aligned bilinear resampling of a square matrix.
///
/// Output index `i` samples the source at `i·(n−1)/(S−1)`; positions are
/// kept as exact rationals so equal sizes reproduce the input bit for bit.
pub fn resize_bilinear(src: &Matrix, size: usize) -> Matrix {
    let n = src.n;
    if n == size {
        return src.clone();
    }
    // (lower index, upper index, weight of upper) per output coordinate.
    let taps: Vec<(usize, usize, f64)> = (0..size)
        .map(|i| {
            if size == 1 || n == 1 {
                let c = (n - 1) / 2;
                let frac = if n > 1 && (n - 1) % 2 == 1 { 0.5 } else { 0.0 };
                return (c, (c + 1).min(n - 1), frac);
            }
            let num = i * (n - 1);
            let den = size - 1;
            let lo = num / den;
            let frac = (num % den) as f64 / den as f64;
            (lo, (lo + 1).min(n - 1), frac)
        })
        .collect();

    let mut out = Matrix::zeros(size);
    for (oi, &(r0, r1, fy)) in taps.iter().enumerate() {
        for (oj, &(c0, c1, fx)) in taps.iter().enumerate() {
            let top = src.get(r0, c0) * (1.0 - fx) + src.get(r0, c1) * fx;
            let bottom = src.get(r1, c0) * (1.0 - fx) + src.get(r1, c1) * fx;
            out.set(oi, oj, top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// How a rescaled series becomes an `S×S` field.
pub trait ResizeStrategy: Named + Send + Sync {
    fn build(&self, rescaled: &[f64], field: &dyn GramianField, size: usize) -> Result<Matrix>;
}

/// Full-length field, then bilinear downscale of the image.
pub struct BilinearImage;

/// PAA to `S` points, then the field at its native size.
pub struct PaaFirst;

impl Named for BilinearImage {
    fn name(&self) -> &'static str {
        "bilinear"
    }
}

impl ResizeStrategy for BilinearImage {
    fn build(&self, rescaled: &[f64], field: &dyn GramianField, size: usize) -> Result<Matrix> {
        let full = field.field(rescaled)?;
        let mut out = resize_bilinear(&full, size);
        // Interpolation is convex, clamp only guards the last ulp.
        for v in &mut out.data {
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(out)
    }
}

impl Named for PaaFirst {
    fn name(&self) -> &'static str {
        "paa"
    }
}

impl ResizeStrategy for PaaFirst {
    fn build(&self, rescaled: &[f64], field: &dyn GramianField, size: usize) -> Result<Matrix> {
        field.field(&paa(rescaled, size)?)
    }
}

pub fn resize_registry() -> Registry<dyn ResizeStrategy> {
    let mut reg: Registry<dyn ResizeStrategy> = Registry::new("resize strategy");
    reg.register(Box::new(BilinearImage)).register(Box::new(PaaFirst));
    reg
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn identity_when_sizes_match() {
        let m = Matrix::from_rows(&[&[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6], &[0.7, 0.8, 0.9]]);
        assert_eq!(resize_bilinear(&m, 3), m);
    }

    #[test]
    fn constant_field() {
        let z = Matrix::zeros(2);
        for s in 1..6 {
            assert!(resize_bilinear(&z, s).data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn checkerboard_center() {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        for s in [3, 5, 7, 33] {
            let out = resize_bilinear(&m, s);
            assert_eq!(out.get(s / 2, s / 2), 0.5);
            assert_eq!(out.get(0, s - 1), 1.0);
            assert_eq!(out.get(0, 0), 0.0);
        }
    }

    #[test]
    fn corner_alignment() {
        // 1D ramp 0..3 sampled at 7 points lands on halves.
        let m = Matrix::from_rows(&[&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0]]);
        let out = resize_bilinear(&m, 7);
        let row: Vec<f64> = (0..7).map(|j| out.get(3, j)).collect();
        assert_eq!(row, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    proptest! {
        #[test]
        fn output_within_input_bounds(data in proptest::collection::vec(-5.0f64..5.0, 16), s in 1usize..20) {
            let m = Matrix { n: 4, data };
            let lo = m.data.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = m.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let out = resize_bilinear(&m, s);
            prop_assert!(out.data.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        }
    }
}

//! Summation and difference Gramian fields.
//!
//! With `φᵢ = arccos(x̃ᵢ)`, the summation field is `cos(φᵢ + φⱼ)` and the
//! difference field is `sin(φᵢ − φⱼ)`. Both are evaluated through the
//! angle-free identities
//!
//! ```text
//! cos(φᵢ + φⱼ) = x̃ᵢx̃ⱼ − √(1−x̃ᵢ²)√(1−x̃ⱼ²)
//! sin(φᵢ − φⱼ) = √(1−x̃ᵢ²)x̃ⱼ − x̃ᵢ√(1−x̃ⱼ²)
//! ```
//!
//! which make the symmetry (resp. antisymmetry) exact in floating point.

use super::Matrix;
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

const CLAMP_TOLERANCE: f64 = 1e-9;

pub trait GramianField: Named + Send + Sync {
    fn field(&self, rescaled: &[f64]) -> Result<Matrix>;
}

/// Returns `x` clamped into `[-1, 1]` with its companion `√(1 − x²)`.
fn polar(rescaled: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut cos = Vec::with_capacity(rescaled.len());
    let mut sin = Vec::with_capacity(rescaled.len());
    for &v in rescaled {
        if v.is_nan() || v.abs() > 1.0 + CLAMP_TOLERANCE {
            return Err(Error::Encode(format!("value {v} outside [-1, 1]; rescale first")));
        }
        let c = v.clamp(-1.0, 1.0);
        cos.push(c);
        sin.push((1.0 - c * c).max(0.0).sqrt());
    }
    Ok((cos, sin))
}

pub fn gasf(rescaled: &[f64]) -> Result<Matrix> {
    let (c, s) = polar(rescaled)?;
    let n = c.len();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = (c[i] * c[j] - s[i] * s[j]).clamp(-1.0, 1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok(m)
}

pub fn gadf(rescaled: &[f64]) -> Result<Matrix> {
    let (c, s) = polar(rescaled)?;
    let n = c.len();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (s[i] * c[j] - c[i] * s[j]).clamp(-1.0, 1.0);
            m.set(i, j, v);
            m.set(j, i, -v);
        }
    }
    Ok(m)
}

pub struct Gasf;
pub struct Gadf;

impl Named for Gasf {
    fn name(&self) -> &'static str {
        "gasf"
    }
}

impl GramianField for Gasf {
    fn field(&self, rescaled: &[f64]) -> Result<Matrix> {
        gasf(rescaled)
    }
}

impl Named for Gadf {
    fn name(&self) -> &'static str {
        "gadf"
    }
}

impl GramianField for Gadf {
    fn field(&self, rescaled: &[f64]) -> Result<Matrix> {
        gadf(rescaled)
    }
}

pub fn field_registry() -> Registry<dyn GramianField> {
    let mut reg: Registry<dyn GramianField> = Registry::new("GAF method");
    reg.register(Box::new(Gasf)).register(Box::new(Gadf));
    reg
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    // Direct angular evaluation, independent of the identities above.
    fn gasf_oracle(x: &[f64]) -> Matrix {
        let n = x.len();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, (x[i].acos() + x[j].acos()).cos());
            }
        }
        m
    }

    fn gadf_oracle(x: &[f64]) -> Matrix {
        let n = x.len();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, (x[i].acos() - x[j].acos()).sin());
            }
        }
        m
    }

    #[test]
    fn analytic_three_point() {
        let x = [-1.0, 0.0, 1.0];
        let expect_s = Matrix::from_rows(&[&[1.0, 0.0, -1.0], &[0.0, -1.0, 0.0], &[-1.0, 0.0, 1.0]]);
        let expect_d = Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 1.0], &[0.0, -1.0, 0.0]]);
        assert!(gasf(&x).unwrap().max_abs_diff(&expect_s) <= 1e-9);
        assert!(gadf(&x).unwrap().max_abs_diff(&expect_d) <= 1e-9);
        assert_eq!(gasf(&[1.0]).unwrap().data, vec![1.0]);
    }

    #[test]
    fn random_length_16_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let s = gasf(&x).unwrap();
        let d = gadf(&x).unwrap();
        assert!(s.max_abs_diff(&gasf_oracle(&x)) <= 1e-6);
        assert!(d.max_abs_diff(&gadf_oracle(&x)) <= 1e-6);
        let neg_t = Matrix { n: d.n, data: d.transpose().data.iter().map(|v| -v).collect() };
        assert!(d.max_abs_diff(&neg_t) <= 1e-6);
    }

    #[test]
    fn clamps_within_tolerance_only() {
        assert!(gasf(&[1.0 + 5e-10, -1.0 - 5e-10]).is_ok());
        assert!(matches!(gasf(&[1.0 + 1e-6]), Err(Error::Encode(_))));
        assert!(matches!(gadf(&[f64::NAN]), Err(Error::Encode(_))));
    }

    #[test]
    fn registry_has_both() {
        let reg = field_registry();
        assert_eq!(reg.names(), vec!["gadf", "gasf"]);
        assert!(reg.get("mtf").is_err());
    }

    proptest! {
        #[test]
        fn symmetry_and_diagonal(x in proptest::collection::vec(-1.0f64..=1.0, 1..40)) {
            let s = gasf(&x).unwrap();
            let d = gadf(&x).unwrap();
            prop_assert_eq!(&s, &s.transpose());
            let neg_t: Vec<f64> = d.transpose().data.iter().map(|v| -v).collect();
            prop_assert_eq!(&d.data, &neg_t);
            for (i, &xi) in x.iter().enumerate() {
                prop_assert_eq!(d.get(i, i), 0.0);
                prop_assert!((s.get(i, i) - (2.0 * xi * xi - 1.0)).abs() <= 1e-12);
            }
            prop_assert!(s.data.iter().chain(&d.data).all(|v| (-1.0..=1.0).contains(v)));
        }
    }
}

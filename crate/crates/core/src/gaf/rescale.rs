use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target interval of the min-max rescale ahead of the polar encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RescaleRange {
    /// `[-1, 1]`, angles span `[0, π]`.
    Symmetric,
    /// `[0, 1]`, angles span `[0, π/2]`.
    Unit,
}

impl RescaleRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            RescaleRange::Symmetric => (-1.0, 1.0),
            RescaleRange::Unit => (0.0, 1.0),
        }
    }
}

impl FromStr for RescaleRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad rescale range `{s}`")))?;
        match parts.as_slice() {
            [lo, hi] if *lo == -1.0 && *hi == 1.0 => Ok(RescaleRange::Symmetric),
            [lo, hi] if *lo == 0.0 && *hi == 1.0 => Ok(RescaleRange::Unit),
            _ => Err(Error::Config(format!("rescale range must be `-1,1` or `0,1`, got `{s}`"))),
        }
    }
}

/// Affine map of `[min x, max x]` onto `range`. A constant input maps to the
/// range midpoint.
pub fn rescale_minmax(x: &[f64], range: RescaleRange) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Encode("cannot rescale an empty vector".into()));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Encode(format!("non-finite sample {bad}")));
    }
    let (lo, hi) = range.bounds();
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![(lo + hi) / 2.0; x.len()]);
    }
    let span = max - min;
    Ok(x
        .iter()
        .map(|&v| (lo + (v - min) / span * (hi - lo)).clamp(lo, hi))
        .collect())
}

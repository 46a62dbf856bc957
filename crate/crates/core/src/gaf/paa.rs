use crate::error::{Error, Result};

/// Piecewise aggregate approximation with fractional segment coverage.
///
/// Segment `k` averages `x` over `[k·n/m, (k+1)·n/m)`, weighting boundary
/// samples by the fraction of them the segment covers. Coverage is computed
/// in integer units of `1/m` samples, so no sample weight is lost.
pub fn paa(x: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if m == 0 {
        return Err(Error::Encode("PAA needs at least one segment".into()));
    }
    if m > n {
        return Err(Error::Encode(format!("PAA cannot expand {n} samples into {m} segments")));
    }
    if m == n {
        return Ok(x.to_vec());
    }
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        // Scaled by m: segment spans [k·n, (k+1)·n), sample i spans [i·m, (i+1)·m).
        let seg_start = k * n;
        let seg_end = seg_start + n;
        let first = seg_start / m;
        let last = (seg_end - 1) / m;
        let mut acc = 0.0;
        for (i, &v) in x.iter().enumerate().take(last + 1).skip(first) {
            let lo = (i * m).max(seg_start);
            let hi = ((i + 1) * m).min(seg_end);
            acc += v * (hi - lo) as f64;
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}

//! Format 212: two 12-bit two's-complement samples packed into three bytes.
//!
//! ```text
//! byte0 = s1[7:0]
//! byte1 = s2[11:8] << 4 | s1[11:8]
//! byte2 = s2[7:0]
//! ```

use crate::error::{Error, Result};

fn sign_extend_12(v: u16) -> i16 {
    ((v << 4) as i16) >> 4
}

fn required_bytes(num_samples: usize) -> usize {
    num_samples.div_ceil(2) * 3
}

/// Decodes `num_samples` raw ADC values from a format-212 stream.
pub fn decode_format212_raw(bytes: &[u8], num_samples: usize) -> Result<Vec<i16>> {
    let need = required_bytes(num_samples);
    if bytes.len() < need {
        return Err(Error::Parse(format!(
            "format 212 stream has {} bytes, {num_samples} samples need {need}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(num_samples);
    for chunk in bytes[..need].chunks_exact(3) {
        let s1 = u16::from(chunk[0]) | (u16::from(chunk[1] & 0x0F) << 8);
        let s2 = u16::from(chunk[2]) | (u16::from(chunk[1] & 0xF0) << 4);
        out.push(sign_extend_12(s1));
        out.push(sign_extend_12(s2));
    }
    out.truncate(num_samples);
    Ok(out)
}

/// Decodes a format-212 stream into physical units: `(raw - baseline) / gain`.
pub fn decode_format212(bytes: &[u8], num_samples: usize, gain: f64, baseline: i32) -> Result<Vec<f64>> {
    if gain.is_nan() || gain <= 0.0 {
        return Err(Error::Parse(format!("gain must be positive, got {gain}")));
    }
    Ok(decode_format212_raw(bytes, num_samples)?
        .into_iter()
        .map(|raw| (f64::from(raw) - f64::from(baseline)) / gain)
        .collect())
}

/// Packs raw 12-bit samples; values are truncated to their low 12 bits and
/// an odd trailing sample is paired with zero.
pub fn encode_format212(samples: &[i16]) -> Vec<u8> {
    let mut out = Vec::with_capacity(required_bytes(samples.len()));
    for pair in samples.chunks(2) {
        let s1 = pair[0] as u16 & 0x0FFF;
        let s2 = pair.get(1).map_or(0, |&s| s as u16 & 0x0FFF);
        out.push((s1 & 0xFF) as u8);
        out.push(((s1 >> 8) as u8) | (((s2 >> 8) as u8) << 4));
        out.push((s2 & 0xFF) as u8);
    }
    out
}

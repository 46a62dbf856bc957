//! Parameter serialization, shared by the wire protocol and checkpoints.
//!
//! ```text
//! u32 tensor_count
//! per tensor: u8 name_len | name | u8 ndim | ndim × u32 dim | numel × f32
//! ```

use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::nn::{ModelParams, Tensor};

/// Exact serialized size of `params`.
pub fn serialized_len(params: &ModelParams) -> usize {
    4 + params
        .tensors
        .iter()
        .map(|(name, t)| 1 + name.len() + 1 + 4 * t.shape().len() + 4 * t.len())
        .sum::<usize>()
}

pub fn serialize_params(params: &ModelParams) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(serialized_len(params));
    let count = u32::try_from(params.tensors.len()).map_err(|_| Error::Serialize("too many tensors".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for (name, t) in &params.tensors {
        let name_len = u8::try_from(name.len())
            .map_err(|_| Error::Serialize(format!("tensor name of {} bytes exceeds 255", name.len())))?;
        let ndim = u8::try_from(t.shape().len()).map_err(|_| Error::Serialize(format!("{name}: too many dims")))?;
        out.push(name_len);
        out.extend_from_slice(name.as_bytes());
        out.push(ndim);
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| Error::Serialize(format!("{name}: dim {d} exceeds u32")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn deserialize_params(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader::new(bytes);
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = usize::from(r.u8()?);
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Deserialize("tensor name is not UTF-8".into()))?;
        let ndim = usize::from(r.u8()?);
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n <= r.remaining() / 4)
            .ok_or_else(|| Error::Deserialize(format!("{name}: dims {shape:?} overflow the input")))?;
        let data = r.f32_vec(numel)?;
        let tensor = Tensor::new(shape, data).map_err(|e| Error::Deserialize(format!("{name}: {e}")))?;
        tensors.push((name, tensor));
    }
    r.finish()?;
    Ok(ModelParams::new(tensors))
}

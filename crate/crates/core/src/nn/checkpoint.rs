//! Model checkpoint: the model spec as fixed-order little-endian fields followed
//! by the wire serialization of the parameters.
//!
//! ```text
//! u16 c1 | u16 c2 | u16 c3 | u16 c4 | u16 fc | u16 classes | f32 alpha | params
//! ```

use std::fs;
use std::path::Path;

use super::{ModelParams, ModelSpec};
use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::transport::{deserialize_params, serialize_params};

pub const SPEC_HEADER_LEN: usize = 16;

pub fn encode_checkpoint(spec: &ModelSpec, params: &ModelParams) -> Result<Vec<u8>> {
    spec.validate()?;
    spec.check_params(params)?;
    let mut out = Vec::new();
    for w in [spec.c1, spec.c2, spec.c3, spec.c4, spec.fc, spec.classes] {
        out.extend_from_slice(&(w as u16).to_le_bytes());
    }
    out.extend_from_slice(&spec.alpha.to_le_bytes());
    out.extend(serialize_params(params)?);
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelSpec, ModelParams)> {
    let mut r = Reader::new(bytes);
    let mut w = [0usize; 6];
    for slot in &mut w {
        *slot = usize::from(r.u16()?);
    }
    let alpha = r.f32()?;
    let spec = ModelSpec { c1: w[0], c2: w[1], c3: w[2], c4: w[3], fc: w[4], classes: w[5], alpha };
    spec.validate().map_err(|e| Error::Deserialize(format!("checkpoint spec: {e}")))?;
    let params = deserialize_params(&bytes[SPEC_HEADER_LEN..])?;
    spec.check_params(&params)?;
    Ok((spec, params))
}

pub fn save_checkpoint(path: &Path, spec: &ModelSpec, params: &ModelParams) -> Result<()> {
    fs::write(path, encode_checkpoint(spec, params)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelSpec, ModelParams)> {
    decode_checkpoint(&fs::read(path)?)
}

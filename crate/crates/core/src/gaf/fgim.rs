//! `.fgim` image container.
//!
//! ```text
//! "FGIM" | u8 version | u32 count | u16 size
//! count × { u8 label | size·size × f32 (row-major) }
//! ```

use std::fs;
use std::path::Path;

use super::GafImage;
use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::ingest::BeatLabel;

pub const FGIM_MAGIC: &[u8; 4] = b"FGIM";
pub const FGIM_VERSION: u8 = 1;

/// Serializes images; all must share one size.
pub fn encode_fgim(images: &[GafImage]) -> Result<Vec<u8>> {
    let size = images.first().map_or(0, |i| i.size);
    if images.iter().any(|i| i.size != size || i.pixels.len() != size * size) {
        return Err(Error::Serialize("images in one container must share a size".into()));
    }
    let size16 = u16::try_from(size).map_err(|_| Error::Serialize(format!("image size {size} exceeds u16")))?;
    let count = u32::try_from(images.len()).map_err(|_| Error::Serialize("too many images".into()))?;
    let mut out = Vec::with_capacity(11 + images.len() * (1 + 4 * size * size));
    out.extend_from_slice(FGIM_MAGIC);
    out.push(FGIM_VERSION);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&size16.to_le_bytes());
    for img in images {
        out.push(img.label.index() as u8);
        for p in &img.pixels {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    Ok(out)
}

/// The method tag is not stored; decoded images carry `method`.
pub fn decode_fgim(bytes: &[u8], method: &str) -> Result<Vec<GafImage>> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != FGIM_MAGIC {
        return Err(Error::Deserialize("not an FGIM file (bad magic)".into()));
    }
    let version = r.u8()?;
    if version != FGIM_VERSION {
        return Err(Error::Deserialize(format!("unsupported FGIM version {version}")));
    }
    let count = r.u32()? as usize;
    let size = usize::from(r.u16()?);
    let per_image = 1 + 4 * size * size;
    if r.remaining() != count * per_image {
        return Err(Error::Deserialize(format!(
            "FGIM body is {} bytes, expected {count} × {per_image}",
            r.remaining()
        )));
    }
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let label = BeatLabel::from_index(usize::from(r.u8()?)).map_err(|e| Error::Deserialize(e.to_string()))?;
        let pixels = r.f32_vec(size * size)?;
        images.push(GafImage { size, pixels, label, method: method.to_string() });
    }
    r.finish()?;
    Ok(images)
}

pub fn write_fgim(path: &Path, images: &[GafImage]) -> Result<()> {
    fs::write(path, encode_fgim(images)?)?;
    Ok(())
}

pub fn read_fgim(path: &Path) -> Result<Vec<GafImage>> {
    decode_fgim(&fs::read(path)?, "gasf")
}

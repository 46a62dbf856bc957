//! `.fgds` beat manifest container.
//!
//! ```text
//! "FGDS" | u8 version | u32 window | u32 count
//! count × { u8 label | u32 r_peak | u8 name_len | name | window × f32 }
//! ```
//! All integers and floats little-endian.

use std::fs;
use std::path::Path;

use super::{BeatLabel, BeatRecord, DatasetManifest};
use crate::bytes::Reader;
use crate::error::{Error, Result};

pub const FGDS_MAGIC: &[u8; 4] = b"FGDS";
pub const FGDS_VERSION: u8 = 1;

pub fn encode_fgds(manifest: &DatasetManifest) -> Result<Vec<u8>> {
    let window = manifest.window().unwrap_or(0);
    let mut out = Vec::new();
    out.extend_from_slice(FGDS_MAGIC);
    out.push(FGDS_VERSION);
    out.extend_from_slice(&(window as u32).to_le_bytes());
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    for beat in &manifest.beats {
        let name = beat.record_name.as_bytes();
        let name_len = u8::try_from(name.len())
            .map_err(|_| Error::Serialize(format!("record name `{}` longer than 255 bytes", beat.record_name)))?;
        out.push(beat.label.index() as u8);
        out.extend_from_slice(&beat.r_peak_index.to_le_bytes());
        out.push(name_len);
        out.extend_from_slice(name);
        for v in &beat.samples {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_fgds(bytes: &[u8]) -> Result<DatasetManifest> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != FGDS_MAGIC {
        return Err(Error::Deserialize("not an FGDS file (bad magic)".into()));
    }
    let version = r.u8()?;
    if version != FGDS_VERSION {
        return Err(Error::Deserialize(format!("unsupported FGDS version {version}")));
    }
    let window = r.u32()? as usize;
    let count = r.u32()? as usize;
    let mut beats = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let label = BeatLabel::from_index(usize::from(r.u8()?)).map_err(|e| Error::Deserialize(e.to_string()))?;
        let r_peak_index = r.u32()?;
        let name_len = usize::from(r.u8()?);
        let record_name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Deserialize("record name is not UTF-8".into()))?;
        let samples = r.f32_vec(window)?;
        beats.push(BeatRecord { samples, label, record_name, r_peak_index });
    }
    r.finish()?;
    Ok(DatasetManifest::new(beats))
}

pub fn write_fgds(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    fs::write(path, encode_fgds(manifest)?)?;
    Ok(())
}

pub fn read_fgds(path: &Path) -> Result<DatasetManifest> {
    decode_fgds(&fs::read(path)?)
}

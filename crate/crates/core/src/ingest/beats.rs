use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use super::{decode_format212, parse_annotations, parse_header, Annotation, BeatLabel, BeatRecord, DatasetManifest, NUM_CLASSES};
use crate::error::{Error, Result};

/// Maps annotation codes to beat classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatCodeMap {
    codes: BTreeMap<u8, BeatLabel>,
}

impl Default for BeatCodeMap {
    /// Standard WFDB beat codes: NORMAL 1, LBBB 2, RBBB 3, PVC 5, APC 8.
    fn default() -> Self {
        let codes = [(1, BeatLabel::N), (2, BeatLabel::L), (3, BeatLabel::R), (8, BeatLabel::A), (5, BeatLabel::V)]
            .into_iter()
            .collect();
        Self { codes }
    }
}

impl BeatCodeMap {
    /// Keeps only the codes whose label is in `classes`.
    pub fn restricted_to(&self, classes: &[BeatLabel]) -> Self {
        Self {
            codes: self
                .codes
                .iter()
                .filter(|(_, l)| classes.contains(l))
                .map(|(&c, &l)| (c, l))
                .collect(),
        }
    }

    pub fn label(&self, code: u8) -> Option<BeatLabel> {
        self.codes.get(&code).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub beats: Vec<BeatRecord>,
    /// Mapped beats whose window crossed the record boundary.
    pub dropped: usize,
}

/// Cuts a `window`-sample segment `[r - window/2, r + window/2)` around each
/// mapped annotation.
pub fn extract_beats(
    record_name: &str,
    signal: &[f64],
    annotations: &[Annotation],
    window: usize,
    code_map: &BeatCodeMap,
) -> Result<Extraction> {
    if window == 0 || !window.is_multiple_of(2) {
        return Err(Error::Config(format!("beat window must be even and positive, got {window}")));
    }
    let half = window / 2;
    let mut beats = Vec::new();
    let mut dropped = 0;
    for ann in annotations {
        let Some(label) = code_map.label(ann.code) else {
            continue;
        };
        let r = ann.sample_index as usize;
        if r < half || r + half > signal.len() {
            dropped += 1;
            continue;
        }
        let samples: Vec<f32> = signal[r - half..r + half].iter().map(|&v| v as f32).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            dropped += 1;
            continue;
        }
        beats.push(BeatRecord {
            samples,
            label,
            record_name: record_name.to_string(),
            r_peak_index: u32::try_from(r).map_err(|_| Error::Parse(format!("R-peak index {r} exceeds u32")))?,
        });
    }
    Ok(Extraction { beats, dropped })
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub window: usize,
    pub classes: Vec<BeatLabel>,
    pub max_per_class: Option<usize>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            window: 128,
            classes: BeatLabel::ALL.to_vec(),
            max_per_class: None,
        }
    }
}

/// Reads one `.hea`/`.dat`/`.atr` triplet and extracts channel-0 beats.
pub fn load_record(dir: &Path, name: &str, opts: &IngestOptions) -> Result<Extraction> {
    let header_text = fs::read_to_string(dir.join(format!("{name}.hea")))?;
    let lines: Vec<&str> = header_text.lines().collect();
    let header = parse_header(&lines)?;
    let sig = &header.signals[0];
    if sig.storage_format != 212 {
        return Err(Error::Parse(format!(
            "record {name}: storage format {} is not supported (only 212)",
            sig.storage_format
        )));
    }
    if header.signals.iter().any(|s| s.file_name != sig.file_name || s.storage_format != 212) {
        return Err(Error::Parse(format!("record {name}: signals must share one format-212 file")));
    }

    let data = fs::read(dir.join(&sig.file_name))?;
    let nsig = header.num_signals;
    let frames = if header.num_samples > 0 {
        header.num_samples as usize
    } else {
        data.len() * 2 / 3 / nsig
    };
    let interleaved = decode_format212(&data, frames * nsig, sig.gain, sig.baseline)?;
    let channel0: Vec<f64> = interleaved.iter().step_by(nsig).copied().collect();

    let annotations = parse_annotations(&fs::read(dir.join(format!("{name}.atr")))?)?;
    if annotations.is_empty() {
        warn!("record {name}: no annotations");
    }
    let code_map = BeatCodeMap::default().restricted_to(&opts.classes);
    extract_beats(name, &channel0, &annotations, opts.window, &code_map)
}

fn record_names(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path: PathBuf = entry?.path();
        if path.extension().is_some_and(|e| e == "hea") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if dir.join(format!("{stem}.atr")).exists() {
                names.push(stem);
            } else {
                warn!("record {stem}: no .atr file, skipping");
            }
        }
    }
    names.sort();
    Ok(names)
}

/// Ingests every annotated record in `dir`, in record-name order.
///
/// Returns the manifest and the number of boundary-dropped beats. With
/// `max_per_class`, the first `K` beats of each class in record order are
/// kept.
pub fn read_data_dir(dir: &Path, opts: &IngestOptions) -> Result<(DatasetManifest, usize)> {
    let names = record_names(dir)?;
    let per_record: Vec<Extraction> = names
        .par_iter()
        .map(|name| load_record(dir, name, opts))
        .collect::<Result<_>>()?;

    let mut kept = [0usize; NUM_CLASSES];
    let mut beats = Vec::new();
    let mut dropped = 0;
    for extraction in per_record {
        dropped += extraction.dropped;
        for beat in extraction.beats {
            let k = beat.label.index();
            if opts.max_per_class.is_some_and(|cap| kept[k] >= cap) {
                continue;
            }
            kept[k] += 1;
            beats.push(beat);
        }
    }
    if beats.is_empty() {
        warn!("no beats extracted from {}", dir.display());
    }
    Ok((DatasetManifest::new(beats), dropped))
}

#[cfg(test)]
mod tests {
    use super::super::annotation::encode_beat_word;
    use super::super::encode_format212;
    use super::*;

    fn ann(idx: u64, code: u8) -> Annotation {
        Annotation { sample_index: idx, code }
    }

    #[test]
    fn window_and_boundaries() {
        let signal: Vec<f64> = (0..650_000).map(|i| i as f64).collect();
        let map = BeatCodeMap::default();
        let out = extract_beats("100", &signal, &[ann(100, 1), ann(30, 1), ann(200, 4)], 128, &map).unwrap();
        assert_eq!(out.beats.len(), 1);
        assert_eq!(out.dropped, 1);
        let beat = &out.beats[0];
        assert_eq!(beat.samples.len(), 128);
        assert_eq!(beat.samples[0], 36.0);
        assert_eq!(beat.samples[127], 163.0);
        assert_eq!(beat.label, BeatLabel::N);
        assert_eq!(beat.r_peak_index, 100);
    }

    #[test]
    fn right_boundary_and_labels() {
        let signal = vec![0.0; 200];
        let map = BeatCodeMap::default();
        let anns = [ann(64, 2), ann(136, 3), ann(137, 8), ann(100, 5), ann(100, 8)];
        let out = extract_beats("r", &signal, &anns, 128, &map).unwrap();
        let labels: Vec<BeatLabel> = out.beats.iter().map(|b| b.label).collect();
        assert_eq!(labels, vec![BeatLabel::L, BeatLabel::R, BeatLabel::V, BeatLabel::A]);
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn odd_window_rejected() {
        let err = extract_beats("r", &[0.0; 10], &[], 7, &BeatCodeMap::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn restricted_map() {
        let map = BeatCodeMap::default().restricted_to(&[BeatLabel::V]);
        assert_eq!(map.label(5), Some(BeatLabel::V));
        assert_eq!(map.label(1), None);
    }

    #[test]
    fn reads_synthetic_triplet() {
        let dir = tempfile::tempdir().unwrap();
        let n = 400usize;
        // Two interleaved channels; channel 0 is a ramp, channel 1 constant.
        let mut raw = Vec::with_capacity(2 * n);
        for i in 0..n {
            raw.push(i as i16 + 10);
            raw.push(-5);
        }
        fs::write(dir.path().join("rec.dat"), encode_format212(&raw)).unwrap();
        fs::write(
            dir.path().join("rec.hea"),
            format!("rec 2 360 {n}\nrec.dat 212 2 11 10 0 0 0 MLII\nrec.dat 212 2 11 0 0 0 0 V1\n"),
        )
        .unwrap();
        let mut atr = Vec::new();
        for (code, interval) in [(1u8, 100u16), (5, 100), (8, 100), (1, 90)] {
            atr.extend(encode_beat_word(code, interval));
        }
        atr.extend([0, 0]);
        fs::write(dir.path().join("rec.atr"), atr).unwrap();
        // A header with no annotation file is ignored.
        fs::write(dir.path().join("orphan.hea"), "orphan 1\norphan.dat 212\n").unwrap();

        let opts = IngestOptions { window: 64, ..Default::default() };
        let (manifest, dropped) = read_data_dir(dir.path(), &opts).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(manifest.len(), 3);
        assert_eq!(manifest.beats[0].label, BeatLabel::N);
        assert_eq!(manifest.beats[1].label, BeatLabel::V);
        assert_eq!(manifest.beats[2].label, BeatLabel::A);
        // (raw - 10) / 2 for raw = i + 10 gives i / 2.
        assert_eq!(manifest.beats[0].samples[0], (100 - 32) as f32 / 2.0);

        let capped = IngestOptions { window: 64, max_per_class: Some(0), ..Default::default() };
        assert!(read_data_dir(dir.path(), &capped).unwrap().0.is_empty());
    }
}

//! WFDB record ingestion, beat extraction and dataset partitioning.

mod annotation;
mod beats;
mod fgds;
mod format212;
mod header;
mod split;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use annotation::{parse_annotations, Annotation};
pub use beats::{extract_beats, load_record, read_data_dir, BeatCodeMap, Extraction, IngestOptions};
pub use fgds::{decode_fgds, encode_fgds, read_fgds, write_fgds, FGDS_MAGIC, FGDS_VERSION};
pub use format212::{decode_format212, decode_format212_raw, encode_format212};
pub use header::{parse_header, RecordHeader, SignalSpec};
pub use split::{largest_remainder, partition_clients, split_train_test};
pub use synth::{synth_dataset, SynthOptions};

pub const NUM_CLASSES: usize = 5;

/// The five heartbeat classes, in their fixed class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BeatLabel {
    N,
    L,
    R,
    A,
    V,
}

impl BeatLabel {
    pub const ALL: [BeatLabel; NUM_CLASSES] =
        [BeatLabel::N, BeatLabel::L, BeatLabel::R, BeatLabel::A, BeatLabel::V];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::Parse(format!("class index {index} out of range")))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BeatLabel::N => "N",
            BeatLabel::L => "L",
            BeatLabel::R => "R",
            BeatLabel::A => "A",
            BeatLabel::V => "V",
        }
    }
}

impl fmt::Display for BeatLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BeatLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "N" => Ok(BeatLabel::N),
            "L" => Ok(BeatLabel::L),
            "R" => Ok(BeatLabel::R),
            "A" => Ok(BeatLabel::A),
            "V" => Ok(BeatLabel::V),
            other => Err(Error::Config(format!("unknown beat class `{other}`"))),
        }
    }
}

/// One extracted heartbeat window in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatRecord {
    pub samples: Vec<f32>,
    pub label: BeatLabel,
    pub record_name: String,
    pub r_peak_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    Train,
    Test,
    All,
}

/// A list of beats plus the bookkeeping of how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub beats: Vec<BeatRecord>,
    pub split: SplitTag,
    pub shard: Option<usize>,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn new(beats: Vec<BeatRecord>) -> Self {
        Self {
            beats,
            split: SplitTag::All,
            shard: None,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for beat in &self.beats {
            counts[beat.label.index()] += 1;
        }
        counts
    }

    /// Sample window length, if every beat shares one.
    pub fn window(&self) -> Option<usize> {
        let first = self.beats.first()?.samples.len();
        self.beats
            .iter()
            .all(|b| b.samples.len() == first)
            .then_some(first)
    }
}

/// Parses a comma separated class list such as `N,L,R,A,V`.
pub fn parse_class_list(list: &str) -> Result<Vec<BeatLabel>> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let label: BeatLabel = item.parse()?;
        if !out.contains(&label) {
            out.push(label);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty class list".into()));
    }
    Ok(out)
}

//! MIT-format annotation files (`.atr`).
//!
//! The stream is a sequence of little-endian 16-bit words, each carrying a
//! 6-bit annotation code in the top bits and a 10-bit time interval below.
//! A handful of codes are control entries that modify the stream instead of
//! marking a beat.

use crate::error::{Error, Result};

const CODE_SKIP: u16 = 59;
const CODE_NUM: u16 = 60;
const CODE_SUB: u16 = 61;
const CODE_CHN: u16 = 62;
const CODE_AUX: u16 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub sample_index: u64,
    pub code: u8,
}

struct Words<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Words<'_> {
    fn next_word(&mut self) -> Result<Option<u16>> {
        match self.bytes.len() - self.pos {
            0 => Ok(None),
            1 => Err(truncated(self.pos)),
            _ => {
                let w = u16::from_le_bytes([self.bytes[self.pos], self.bytes[self.pos + 1]]);
                self.pos += 2;
                Ok(Some(w))
            }
        }
    }

    fn take_word(&mut self) -> Result<u16> {
        self.next_word()?.ok_or_else(|| truncated(self.pos))
    }

    fn skip(&mut self, n: usize) -> Result<()> {
        if self.bytes.len() - self.pos < n {
            return Err(truncated(self.pos));
        }
        self.pos += n;
        Ok(())
    }
}

fn truncated(pos: usize) -> Error {
    Error::Parse(format!("annotation stream truncated at byte {pos}"))
}

/// Decodes an annotation stream into absolute-time annotations.
///
/// Control entries (SKIP, NUM, SUB, CHN, AUX) are consumed and never
/// returned. A stream that ends on a word boundary without the 0/0
/// terminator is accepted.
pub fn parse_annotations(bytes: &[u8]) -> Result<Vec<Annotation>> {
    let mut words = Words { bytes, pos: 0 };
    let mut time: u64 = 0;
    let mut out = Vec::new();

    while let Some(word) = words.next_word()? {
        let code = word >> 10;
        let interval = word & 0x03FF;
        match code {
            0 if interval == 0 => break,
            CODE_SKIP => {
                // 32-bit interval stored as high word then low word.
                let high = words.take_word()?;
                let low = words.take_word()?;
                let skip = (i32::from(high as i16) << 16) | i32::from(low);
                time = time.checked_add_signed(i64::from(skip)).ok_or_else(|| {
                    Error::Parse(format!("SKIP of {skip} moves time before zero"))
                })?;
            }
            CODE_NUM | CODE_SUB | CODE_CHN => {}
            CODE_AUX => words.skip(usize::from(interval) + usize::from(interval & 1))?,
            _ => {
                time += u64::from(interval);
                out.push(Annotation {
                    sample_index: time,
                    code: code as u8,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) fn encode_beat_word(code: u8, interval: u16) -> [u8; 2] {
    ((u16::from(code) << 10) | (interval & 0x3FF)).to_le_bytes()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn single_beat() {
        let anns = parse_annotations(&[0x13, 0x04, 0x00, 0x00]).unwrap();
        assert_eq!(anns, vec![Annotation { sample_index: 19, code: 1 }]);
    }

    #[test]
    fn immediate_terminator() {
        assert!(parse_annotations(&[0x00, 0x00]).unwrap().is_empty());
        assert!(parse_annotations(&[]).unwrap().is_empty());
    }

    #[test]
    fn cumulative_intervals() {
        let mut bytes = Vec::new();
        bytes.extend(encode_beat_word(1, 19));
        bytes.extend(encode_beat_word(5, 5));
        bytes.extend([0, 0]);
        let anns = parse_annotations(&bytes).unwrap();
        let idx: Vec<u64> = anns.iter().map(|a| a.sample_index).collect();
        assert_eq!(idx, vec![19, 24]);
        assert_eq!(anns[1].code, 5);
    }

    #[test]
    fn control_entries_consumed() {
        let mut bytes = Vec::new();
        bytes.extend(encode_beat_word(1, 10));
        // SKIP forward by 0x0001_0002 samples.
        bytes.extend(encode_beat_word(59, 0));
        bytes.extend(1u16.to_le_bytes());
        bytes.extend(2u16.to_le_bytes());
        // AUX with 3 bytes of text, padded to 4.
        bytes.extend(encode_beat_word(63, 3));
        bytes.extend(b"(N\0\0");
        bytes.extend(encode_beat_word(60, 7));
        bytes.extend(encode_beat_word(61, 1));
        bytes.extend(encode_beat_word(62, 0));
        bytes.extend(encode_beat_word(2, 4));
        bytes.extend([0, 0]);
        let anns = parse_annotations(&bytes).unwrap();
        assert_eq!(
            anns,
            vec![
                Annotation { sample_index: 10, code: 1 },
                Annotation { sample_index: 10 + 0x1_0002 + 4, code: 2 },
            ]
        );
    }

    #[test]
    fn truncation_mid_entry() {
        assert!(matches!(parse_annotations(&[0x13]), Err(Error::Parse(_))));
        let mut skip = encode_beat_word(59, 0).to_vec();
        skip.extend([0, 0]);
        assert!(matches!(parse_annotations(&skip), Err(Error::Parse(_))));
        let mut aux = encode_beat_word(63, 5).to_vec();
        aux.extend(b"abc");
        assert!(matches!(parse_annotations(&aux), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn indices_non_decreasing(words in proptest::collection::vec((1u8..59, 0u16..1024), 0..200)) {
            let bytes: Vec<u8> = words.iter().flat_map(|&(c, i)| encode_beat_word(c, i)).collect();
            let anns = parse_annotations(&bytes).unwrap();
            prop_assert!(anns.len() <= words.len());
            prop_assert!(anns.windows(2).all(|w| w[0].sample_index <= w[1].sample_index));
        }
    }
}

//! Frame layout, 10-byte header followed by the payload:
//!
//! ```text
//! "FGAF" | u8 version (1) | u8 msg_type | u32 payload_len (LE) | payload
//! ```

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FRAME_MAGIC: &[u8; 4] = b"FGAF";
pub const PROTOCOL_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
pub const MAX_PAYLOAD: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageType {
    Register = 1,
    GlobalModel = 2,
    LocalUpdate = 3,
    Done = 4,
}

impl MessageType {
    pub const ALL: [MessageType; 4] = [MessageType::Register, MessageType::GlobalModel, MessageType::LocalUpdate, MessageType::Done];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(MessageType::Register),
            2 => Ok(MessageType::GlobalModel),
            3 => Ok(MessageType::LocalUpdate),
            4 => Ok(MessageType::Done),
            other => Err(Error::Protocol(format!("unknown message type {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MessageType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: MessageType, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(Error::Protocol(format!("payload of {} bytes exceeds the 256 MiB bound", self.payload.len())));
        }
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(FRAME_MAGIC);
        out.push(PROTOCOL_VERSION);
        out.push(self.msg_type.code());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }
}

/// Parsed header: message type and payload length.
pub fn decode_header(header: &[u8; HEADER_LEN]) -> Result<(MessageType, usize)> {
    if &header[..4] != FRAME_MAGIC {
        return Err(Error::Protocol(format!("bad magic {:02x?}", &header[..4])));
    }
    if header[4] != PROTOCOL_VERSION {
        return Err(Error::Protocol(format!("unsupported protocol version {}", header[4])));
    }
    let msg_type = MessageType::from_code(header[5])?;
    let len = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("payload length {len} exceeds the 256 MiB bound")));
    }
    Ok((msg_type, len))
}

pub(crate) fn map_io(e: io::Error) -> Error {
    match e.kind() {
        io::ErrorKind::UnexpectedEof
        | io::ErrorKind::BrokenPipe
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::NotConnected => Error::ChannelClosed,
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout,
        _ => Error::Io(e),
    }
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<usize> {
    let bytes = frame.encode()?;
    w.write_all(&bytes).map_err(map_io)?;
    w.flush().map_err(map_io)?;
    Ok(bytes.len())
}

/// Reads exactly one frame; short reads are retried until the frame is
/// complete or the stream ends.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(map_io)?;
    let (msg_type, len) = decode_header(&header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(map_io)?;
    Ok(Frame { msg_type, payload })
}

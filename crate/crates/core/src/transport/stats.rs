use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::frame::MessageType;

/// Byte and frame counters for one endpoint. Every frame counts
/// header plus payload.
#[derive(Debug, Default)]
pub struct CommStats {
    bytes_sent: AtomicU64,
    bytes_received: AtomicU64,
    frames_sent: [AtomicU64; 4],
    frames_received: [AtomicU64; 4],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommSnapshot {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    /// Indexed by message type code minus one.
    pub frames_sent: [u64; 4],
    pub frames_received: [u64; 4],
}

impl CommSnapshot {
    pub fn total_bytes(&self) -> u64 {
        self.bytes_sent + self.bytes_received
    }

    pub fn sent_of(&self, t: MessageType) -> u64 {
        self.frames_sent[usize::from(t.code() - 1)]
    }

    pub fn received_of(&self, t: MessageType) -> u64 {
        self.frames_received[usize::from(t.code() - 1)]
    }
}

impl std::ops::Add for CommSnapshot {
    type Output = CommSnapshot;

    fn add(self, o: CommSnapshot) -> CommSnapshot {
        let mut s = self;
        s.bytes_sent += o.bytes_sent;
        s.bytes_received += o.bytes_received;
        for i in 0..4 {
            s.frames_sent[i] += o.frames_sent[i];
            s.frames_received[i] += o.frames_received[i];
        }
        s
    }
}

impl CommStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_sent(&self, t: MessageType, wire_len: usize) {
        self.bytes_sent.fetch_add(wire_len as u64, Ordering::Relaxed);
        self.frames_sent[usize::from(t.code() - 1)].fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_received(&self, t: MessageType, wire_len: usize) {
        self.bytes_received.fetch_add(wire_len as u64, Ordering::Relaxed);
        self.frames_received[usize::from(t.code() - 1)].fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CommSnapshot {
        let load = |a: &AtomicU64| a.load(Ordering::Relaxed);
        CommSnapshot {
            bytes_sent: load(&self.bytes_sent),
            bytes_received: load(&self.bytes_received),
            frames_sent: std::array::from_fn(|i| load(&self.frames_sent[i])),
            frames_received: std::array::from_fn(|i| load(&self.frames_received[i])),
        }
    }
}

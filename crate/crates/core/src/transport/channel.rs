use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Duration;

use super::frame::{read_frame, write_frame, Frame};
use super::message::Message;
use super::stats::CommStats;
use crate::error::{Error, Result};

/// Bidirectional, reliable, ordered frame stream.
pub trait Channel: Send {
    fn send_frame(&mut self, frame: &Frame) -> Result<()>;
    fn recv_frame(&mut self) -> Result<Frame>;
    /// `None` blocks indefinitely.
    fn set_timeout(&mut self, timeout: Option<Duration>) -> Result<()>;
    /// Further sends and receives on this end fail with `ChannelClosed`;
    /// the peer observes end of stream.
    fn close(&mut self);
    fn stats(&self) -> &Arc<CommStats>;

    fn send_message(&mut self, msg: &Message) -> Result<()> {
        self.send_frame(&msg.to_frame()?)
    }

    fn recv_message(&mut self) -> Result<Message> {
        Message::from_frame(&self.recv_frame()?)
    }
}

/// Byte stream a [`FramedChannel`] can run over.
pub trait ByteStream: Read + Write + Send {
    fn set_read_timeout(&mut self, timeout: Option<Duration>) -> std::io::Result<()>;
    fn shutdown(&mut self);
}

pub struct FramedChannel<S: ByteStream> {
    stream: S,
    stats: Arc<CommStats>,
    closed: bool,
}

impl<S: ByteStream> FramedChannel<S> {
    pub fn new(stream: S, stats: Arc<CommStats>) -> Self {
        Self { stream, stats, closed: false }
    }
}

impl<S: ByteStream> Channel for FramedChannel<S> {
    fn send_frame(&mut self, frame: &Frame) -> Result<()> {
        if self.closed {
            return Err(Error::ChannelClosed);
        }
        let n = write_frame(&mut self.stream, frame)?;
        self.stats.record_sent(frame.msg_type, n);
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Frame> {
        if self.closed {
            return Err(Error::ChannelClosed);
        }
        let frame = read_frame(&mut self.stream)?;
        self.stats.record_received(frame.msg_type, frame.wire_len());
        Ok(frame)
    }

    fn set_timeout(&mut self, timeout: Option<Duration>) -> Result<()> {
        Ok(self.stream.set_read_timeout(timeout)?)
    }

    fn close(&mut self) {
        if !self.closed {
            self.closed = true;
            self.stream.shutdown();
        }
    }

    fn stats(&self) -> &Arc<CommStats> {
        &self.stats
    }
}

impl<S: ByteStream> Drop for FramedChannel<S> {
    fn drop(&mut self) {
        self.close();
    }
}

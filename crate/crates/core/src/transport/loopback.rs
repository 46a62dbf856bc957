//! In-process byte pipe pair. Each write becomes one chunk on an mpsc
//! channel; dropping or shutting down the writer reads as end of stream.

use std::io::{self, Read, Write};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

use super::channel::{ByteStream, FramedChannel};
use super::stats::CommStats;

pub struct LoopbackStream {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
    buf: Vec<u8>,
    pos: usize,
    timeout: Option<Duration>,
    eof: bool,
}

pub fn loopback_stream_pair() -> (LoopbackStream, LoopbackStream) {
    let (tx_a, rx_b) = mpsc::channel();
    let (tx_b, rx_a) = mpsc::channel();
    let mk = |tx, rx| LoopbackStream { tx: Some(tx), rx, buf: Vec::new(), pos: 0, timeout: None, eof: false };
    (mk(tx_a, rx_a), mk(tx_b, rx_b))
}

pub fn loopback_channel_pair(
    stats_a: Arc<CommStats>,
    stats_b: Arc<CommStats>,
) -> (FramedChannel<LoopbackStream>, FramedChannel<LoopbackStream>) {
    let (a, b) = loopback_stream_pair();
    (FramedChannel::new(a, stats_a), FramedChannel::new(b, stats_b))
}

impl Read for LoopbackStream {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if out.is_empty() {
            return Ok(0);
        }
        while self.pos == self.buf.len() {
            if self.eof {
                return Ok(0);
            }
            let next = match self.timeout {
                None => self.rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
                Some(t) => self.rx.recv_timeout(t),
            };
            match next {
                Ok(chunk) => {
                    self.buf = chunk;
                    self.pos = 0;
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.eof = true;
                    return Ok(0);
                }
                Err(RecvTimeoutError::Timeout) => return Err(io::ErrorKind::TimedOut.into()),
            }
        }
        let n = out.len().min(self.buf.len() - self.pos);
        out[..n].copy_from_slice(&self.buf[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for LoopbackStream {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        let tx = self.tx.as_ref().ok_or(io::ErrorKind::BrokenPipe)?;
        tx.send(data.to_vec()).map_err(|_| io::Error::from(io::ErrorKind::BrokenPipe))?;
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl ByteStream for LoopbackStream {
    fn set_read_timeout(&mut self, timeout: Option<Duration>) -> io::Result<()> {
        if timeout == Some(Duration::ZERO) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "zero timeout"));
        }
        self.timeout = timeout;
        Ok(())
    }

    fn shutdown(&mut self) {
        self.tx = None;
    }
}

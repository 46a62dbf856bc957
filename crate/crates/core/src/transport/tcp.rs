use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::channel::{ByteStream, Channel, FramedChannel};
use super::stats::CommStats;
use crate::error::{Error, Result};

impl ByteStream for TcpStream {
    fn set_read_timeout(&mut self, timeout: Option<Duration>) -> std::io::Result<()> {
        TcpStream::set_read_timeout(self, timeout)
    }

    fn shutdown(&mut self) {
        let _ = TcpStream::shutdown(self, Shutdown::Both);
    }
}

pub fn tcp_channel(stream: TcpStream, stats: Arc<CommStats>) -> Result<FramedChannel<TcpStream>> {
    stream.set_nodelay(true)?;
    Ok(FramedChannel::new(stream, stats))
}

/// Connects to `addr`, retrying refused connections until `patience` runs out.
pub fn connect(addr: &str, stats: Arc<CommStats>, patience: Duration) -> Result<FramedChannel<TcpStream>> {
    let addrs: Vec<SocketAddr> = addr
        .to_socket_addrs()
        .map_err(|e| Error::Config(format!("cannot resolve {addr}: {e}")))?
        .collect();
    let deadline = Instant::now() + patience;
    loop {
        match TcpStream::connect(&addrs[..]) {
            Ok(s) => return tcp_channel(s, stats),
            Err(e) if Instant::now() < deadline => {
                log::debug!("connect {addr}: {e}; retrying");
                std::thread::sleep(Duration::from_millis(100));
            }
            Err(e) => return Err(Error::Io(e)),
        }
    }
}

/// Accepts `n` connections; every channel shares `stats`.
pub fn accept_clients(listener: &TcpListener, n: usize, stats: &Arc<CommStats>) -> Result<Vec<Box<dyn Channel>>> {
    let mut out: Vec<Box<dyn Channel>> = Vec::with_capacity(n);
    while out.len() < n {
        let (stream, peer) = listener.accept()?;
        log::info!("accepted connection from {peer}");
        out.push(Box::new(tcp_channel(stream, Arc::clone(stats))?));
    }
    Ok(out)
}

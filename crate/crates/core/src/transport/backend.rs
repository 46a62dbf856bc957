use std::net::TcpListener;
use std::sync::Arc;

use super::channel::Channel;
use super::loopback::loopback_channel_pair;
use super::stats::CommStats;
use super::tcp::{connect, tcp_channel};
use crate::error::Result;
use crate::registry::{Named, Registry};

/// Server-side and client-side ends of `n` in-process sessions.
pub type SessionEnds = (Vec<Box<dyn Channel>>, Vec<Box<dyn Channel>>);

/// How a single-process run wires its server to its clients.
pub trait TransportBackend: Named + Send + Sync {
    /// Server ends share `server_stats`; client `i` counts into `client_stats[i]`.
    fn connect_local(&self, server_stats: &Arc<CommStats>, client_stats: &[Arc<CommStats>]) -> Result<SessionEnds>;
}

pub struct Loopback;

impl Named for Loopback {
    fn name(&self) -> &'static str {
        "loopback"
    }
}

impl TransportBackend for Loopback {
    fn connect_local(&self, server_stats: &Arc<CommStats>, client_stats: &[Arc<CommStats>]) -> Result<SessionEnds> {
        let mut server: Vec<Box<dyn Channel>> = Vec::new();
        let mut clients: Vec<Box<dyn Channel>> = Vec::new();
        for cs in client_stats {
            let (s, c) = loopback_channel_pair(Arc::clone(server_stats), Arc::clone(cs));
            server.push(Box::new(s));
            clients.push(Box::new(c));
        }
        Ok((server, clients))
    }
}

/// Real sockets on an ephemeral localhost port.
pub struct TcpLocal;

impl Named for TcpLocal {
    fn name(&self) -> &'static str {
        "tcp"
    }
}

impl TransportBackend for TcpLocal {
    fn connect_local(&self, server_stats: &Arc<CommStats>, client_stats: &[Arc<CommStats>]) -> Result<SessionEnds> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?.to_string();
        let mut server: Vec<Box<dyn Channel>> = Vec::new();
        let mut clients: Vec<Box<dyn Channel>> = Vec::new();
        for cs in client_stats {
            clients.push(Box::new(connect(&addr, Arc::clone(cs), std::time::Duration::ZERO)?));
            let (stream, _) = listener.accept()?;
            server.push(Box::new(tcp_channel(stream, Arc::clone(server_stats))?));
        }
        Ok((server, clients))
    }
}

pub fn backend_registry() -> Registry<dyn TransportBackend> {
    let mut reg: Registry<dyn TransportBackend> = Registry::new("transport mode");
    reg.register(Box::new(Loopback)).register(Box::new(TcpLocal));
    reg
}

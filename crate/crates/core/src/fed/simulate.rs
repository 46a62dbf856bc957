use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::client::run_client;
use super::config::FederationConfig;
use super::local::LocalHyper;
use super::server::{run_server, RunAbort, ServerRun};
use crate::error::{Error, Result};
use crate::gaf::GafImage;
use crate::transport::{backend_registry, CommSnapshot, CommStats, TransportBackend};

#[derive(Debug, Clone)]
pub struct Simulation {
    pub run: ServerRun,
    pub server_stats: CommSnapshot,
    /// In configured client order.
    pub client_stats: Vec<CommSnapshot>,
    pub updates_sent: Vec<u32>,
    pub elapsed: Duration,
}

/// Server plus one thread per configured client over the configured
/// transport backend. `shards[i]` belongs to `cfg.clients[i]`.
pub fn simulate(cfg: &FederationConfig, shards: &[Vec<GafImage>], test: Option<&[GafImage]>) -> Result<Simulation, Box<RunAbort>> {
    let registry = backend_registry();
    let backend = registry.get(&cfg.transport.mode).map_err(early)?;
    simulate_with(cfg, backend, shards, test)
}

fn early(error: Error) -> Box<RunAbort> {
    Box::new(RunAbort { error, partial: ServerRun { params: Default::default(), rounds: Vec::new() } })
}

pub fn simulate_with(
    cfg: &FederationConfig,
    backend: &dyn TransportBackend,
    shards: &[Vec<GafImage>],
    test: Option<&[GafImage]>,
) -> Result<Simulation, Box<RunAbort>> {
    cfg.validate().map_err(early)?;
    if shards.len() != cfg.clients.len() {
        return Err(early(Error::Config(format!("{} shards for {} configured clients", shards.len(), cfg.clients.len()))));
    }
    let server_stats = Arc::new(CommStats::new());
    let client_stats: Vec<Arc<CommStats>> = cfg.clients.iter().map(|_| Arc::new(CommStats::new())).collect();
    let (server_ends, client_ends) = backend.connect_local(&server_stats, &client_stats).map_err(early)?;
    let hyper = LocalHyper::from(cfg);
    let start = Instant::now();

    let (outcome, client_results) = thread::scope(|s| {
        let handles: Vec<_> = client_ends
            .into_iter()
            .zip(&cfg.clients)
            .zip(shards)
            .map(|((mut ch, entry), shard)| {
                let hyper = &hyper;
                s.spawn(move || run_client(ch.as_mut(), &entry.id, &cfg.model, hyper, shard))
            })
            .collect();
        let outcome = run_server(cfg, server_ends, &server_stats, test);
        let results: Vec<Result<u32>> = handles.into_iter().map(|h| h.join().expect("client thread panicked")).collect();
        (outcome, results)
    });
    let elapsed = start.elapsed();

    let run = outcome?;
    let mut updates_sent = Vec::with_capacity(client_results.len());
    for (entry, r) in cfg.clients.iter().zip(client_results) {
        match r {
            Ok(n) => updates_sent.push(n),
            Err(e) => return Err(Box::new(RunAbort { error: Error::ClientAbort(format!("{}: {e}", entry.id)), partial: run })),
        }
    }
    Ok(Simulation {
        run,
        server_stats: server_stats.snapshot(),
        client_stats: client_stats.iter().map(|s| s.snapshot()).collect(),
        updates_sent,
        elapsed,
    })
}

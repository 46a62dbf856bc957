use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, aggregator_registry, ClientSummary, ClientUpdate};
use super::config::FederationConfig;
use crate::error::Error;
use crate::eval::evaluate;
use crate::gaf::GafImage;
use crate::nn::{init_params, ModelParams};
use crate::transport::{Channel, CommStats, Message};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    /// Sorted by client id.
    pub clients: Vec<ClientSummary>,
    pub test_accuracy: Option<f64>,
    /// Server counters after the round's aggregation.
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerRun {
    pub params: ModelParams,
    pub rounds: Vec<RoundReport>,
}

/// A run that stopped early, with everything completed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunAbort {
    pub error: Error,
    pub partial: ServerRun,
}

type Session = (String, Box<dyn Channel>);

fn abort(round: u32, client: &str, reason: impl ToString) -> Error {
    Error::RoundAbort { round, client: client.to_string(), reason: reason.to_string() }
}

fn reason(e: &Error) -> String {
    match e {
        Error::ChannelClosed => "disconnected".into(),
        Error::Timeout => "timed out".into(),
        other => other.to_string(),
    }
}

/// Reads one REGISTER per channel and orders sessions by client id. Every
/// configured client must register exactly once.
fn register(cfg: &FederationConfig, channels: Vec<Box<dyn Channel>>) -> Result<Vec<Session>, Error> {
    if channels.len() != cfg.clients.len() {
        return Err(Error::Config(format!("{} channels for {} configured clients", channels.len(), cfg.clients.len())));
    }
    let deadline = Instant::now() + cfg.timeout();
    let mut sessions = BTreeMap::new();
    for (i, mut ch) in channels.into_iter().enumerate() {
        let left = deadline.saturating_duration_since(Instant::now());
        ch.set_timeout(Some(left.max(std::time::Duration::from_millis(1))))?;
        let id = match ch.recv_message() {
            Ok(Message::Register { client_id }) => client_id,
            Ok(other) => return Err(Error::Protocol(format!("connection {i} sent {:?} before REGISTER", other.msg_type()))),
            Err(e) => return Err(abort(0, &format!("connection {i}"), reason(&e))),
        };
        if !cfg.clients.iter().any(|c| c.id == id) {
            return Err(Error::Protocol(format!("unknown client id {id:?}")));
        }
        if sessions.insert(id.clone(), ch).is_some() {
            return Err(Error::Protocol(format!("client {id:?} registered twice")));
        }
        log::info!("registered client {id}");
    }
    Ok(sessions.into_iter().collect())
}

fn collect(sessions: &mut [Session], round: u32, cfg: &FederationConfig) -> Result<Vec<ClientUpdate>, Error> {
    let deadline = Instant::now() + cfg.timeout();
    let results: Vec<Result<ClientUpdate, Error>> = thread::scope(|s| {
        let handles: Vec<_> = sessions
            .iter_mut()
            .map(|(id, ch)| {
                let id = id.as_str();
                s.spawn(move || {
                    let left = deadline.saturating_duration_since(Instant::now());
                    ch.set_timeout(Some(left.max(std::time::Duration::from_millis(1))))
                        .map_err(|e| abort(round, id, reason(&e)))?;
                    match ch.recv_message() {
                        Ok(Message::LocalUpdate(u)) if u.round == round => {
                            cfg.model.check_params(&u.params).map_err(|e| abort(round, id, e))?;
                            Ok(ClientUpdate {
                                client_id: id.to_string(),
                                round,
                                params: u.params,
                                sample_count: u.sample_count,
                                mean_loss: u.mean_loss,
                                accuracy: u.accuracy,
                            })
                        }
                        Ok(Message::LocalUpdate(u)) => Err(abort(round, id, format!("update tagged round {}", u.round))),
                        Ok(other) => Err(abort(round, id, format!("unexpected {:?}", other.msg_type()))),
                        Err(e) => Err(abort(round, id, reason(&e))),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("session thread panicked")).collect()
    });
    results.into_iter().collect()
}

/// Seeded initialization, then `R` synchronous rounds of broadcast,
/// collection of all `N` updates, and aggregation. Sends DONE at the end.
pub fn run_server(
    cfg: &FederationConfig,
    channels: Vec<Box<dyn Channel>>,
    stats: &Arc<CommStats>,
    test: Option<&[GafImage]>,
) -> Result<ServerRun, Box<RunAbort>> {
    let mut run = ServerRun { params: ModelParams::default(), rounds: Vec::new() };
    macro_rules! bail {
        ($e:expr) => {
            return Err(Box::new(RunAbort { error: $e, partial: run }))
        };
    }
    if let Err(e) = cfg.validate() {
        bail!(e);
    }
    run.params = match init_params(&cfg.model, cfg.seed) {
        Ok(p) => p,
        Err(e) => bail!(e),
    };
    let aggregators = aggregator_registry();
    let mode = match aggregators.get(&cfg.aggregation) {
        Ok(m) => m,
        Err(e) => bail!(e),
    };
    let mut sessions = match register(cfg, channels) {
        Ok(s) => s,
        Err(e) => bail!(e),
    };

    for round in 1..=cfg.rounds {
        let frame = match (Message::GlobalModel { params: run.params.clone() }).to_frame() {
            Ok(f) => f,
            Err(e) => bail!(e),
        };
        for (id, ch) in &mut sessions {
            if let Err(e) = ch.send_frame(&frame) {
                bail!(abort(round, id, reason(&e)));
            }
        }
        let updates = match collect(&mut sessions, round, cfg) {
            Ok(u) => u,
            Err(e) => bail!(e),
        };
        let params = match aggregate(&updates, mode) {
            Ok(p) => p,
            Err(e) => bail!(e),
        };
        let test_accuracy = match test.filter(|_| cfg.eval_each_round) {
            Some(t) => match evaluate(&params, &cfg.model, t) {
                Ok((_, acc)) => Some(acc),
                Err(e) => bail!(e),
            },
            None => None,
        };
        let snap = stats.snapshot();
        let report = RoundReport {
            round,
            clients: updates.iter().map(ClientSummary::from).collect(),
            test_accuracy,
            bytes_sent: snap.bytes_sent,
            bytes_received: snap.bytes_received,
        };
        log::info!(
            "round {round}/{}: {} updates aggregated ({}), sent {} B, received {} B",
            cfg.rounds,
            updates.len(),
            cfg.aggregation,
            snap.bytes_sent,
            snap.bytes_received
        );
        run.params = params;
        run.rounds.push(report);
    }

    let done = Message::Done;
    for (id, ch) in &mut sessions {
        if let Err(e) = ch.send_message(&done) {
            log::warn!("could not send DONE to {id}: {e}");
        }
    }
    Ok(run)
}

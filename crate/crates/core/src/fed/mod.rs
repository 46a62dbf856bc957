//! Round-based federated averaging: configuration, aggregation strategies,
//! local training, the server and client sessions and a single-process
//! simulation harness.

mod aggregate;
mod client;
mod config;
mod local;
mod server;
mod simulate;

pub use aggregate::{aggregate, aggregator_registry, Aggregator, ClientSummary, ClientUpdate, SampleWeighted, Uniform};
pub use client::run_client;
pub use config::{ClientEntry, FederationConfig, MomentConfig, TransportConfig};
pub use local::{epoch_seed, local_update, LocalHyper};
pub use server::{run_server, RoundReport, RunAbort, ServerRun};
pub use simulate::{simulate, simulate_with, Simulation};

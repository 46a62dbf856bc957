//! Federated ECG heartbeat classification over Gramian Angular Field images.
//!
//! The pipeline reads WFDB records ([`ingest`]), encodes fixed-length beats
//! as GAF images ([`gaf`]), trains a small CNN ([`nn`]) on each client and
//! averages client weights on a server ([`fed`]) over a framed binary
//! protocol ([`transport`]). [`eval`] holds metrics and run reports.

mod bytes;
pub mod error;
pub mod eval;
pub mod fed;
pub mod gaf;
pub mod ingest;
pub mod nn;
pub mod registry;
pub mod transport;

pub use error::{Error, Result};

use super::aggregate::ClientUpdate;
use super::config::FederationConfig;
use crate::error::{Error, Result};
use crate::gaf::GafImage;
use crate::nn::{train_epoch, AdamConfig, AdamState, ModelParams, ModelSpec};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3))
}

/// Shuffle seed for one local epoch of one client in one round.
pub fn epoch_seed(seed: u64, client_id: &str, round: u32, epoch: u32) -> u64 {
    let mut h = splitmix64(seed ^ fnv1a(client_id.as_bytes()));
    h = splitmix64(h ^ u64::from(round));
    splitmix64(h ^ (u64::from(epoch) << 32))
}

/// What a client needs to train locally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalHyper {
    pub epochs: u32,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl From<&FederationConfig> for LocalHyper {
    fn from(cfg: &FederationConfig) -> Self {
        Self { epochs: cfg.local_epochs, batch_size: cfg.batch_size, adam: cfg.adam_config(), seed: cfg.seed }
    }
}

/// `E` epochs from the received global model with fresh Adam moments.
/// Metrics are the means over the epochs.
pub fn local_update(
    global: &ModelParams,
    spec: &ModelSpec,
    shard: &[GafImage],
    hyper: &LocalHyper,
    client_id: &str,
    round: u32,
) -> Result<ClientUpdate> {
    if hyper.epochs == 0 {
        return Err(Error::Config("local_epochs must be at least 1".into()));
    }
    if shard.is_empty() {
        return Err(Error::Config(format!("client {client_id} has an empty shard")));
    }
    spec.check_params(global)?;
    let sample_count = u32::try_from(shard.len()).map_err(|_| Error::Config("shard exceeds u32 samples".into()))?;
    let mut params = global.clone();
    let mut state = AdamState::new(hyper.adam, &params);
    let (mut loss, mut acc) = (0.0, 0.0);
    for epoch in 0..hyper.epochs {
        let seed = epoch_seed(hyper.seed, client_id, round, epoch);
        let m = train_epoch(&mut params, spec, &mut state, shard, hyper.batch_size, seed)?;
        loss += m.mean_loss;
        acc += m.accuracy;
    }
    let e = f64::from(hyper.epochs);
    Ok(ClientUpdate {
        client_id: client_id.to_string(),
        round,
        params,
        sample_count,
        mean_loss: (loss / e) as f32,
        accuracy: (acc / e) as f32,
    })
}

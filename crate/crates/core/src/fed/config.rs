use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aggregate::aggregator_registry;
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, ModelSpec};
use crate::transport::backend_registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientEntry {
    pub id: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub mode: String,
    pub timeout_sec: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { mode: "loopback".into(), timeout_sec: 600.0 }
    }
}

/// Adam moments; the learning rate lives at the top level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentConfig {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for MomentConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self { beta1: a.beta1, beta2: a.beta2, eps: a.eps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FederationConfig {
    pub rounds: u32,
    pub local_epochs: u32,
    pub lr: f32,
    pub batch_size: usize,
    pub aggregation: String,
    pub seed: u64,
    pub clients: Vec<ClientEntry>,
    pub model: ModelSpec,
    pub transport: TransportConfig,
    pub adam: MomentConfig,
    /// Evaluate the global model on the test set after every round.
    pub eval_each_round: bool,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            local_epochs: 10,
            lr: AdamConfig::default().lr,
            batch_size: 32,
            aggregation: "uniform".into(),
            seed: 0,
            clients: Vec::new(),
            model: ModelSpec::default(),
            transport: TransportConfig::default(),
            adam: MomentConfig::default(),
            eval_each_round: false,
        }
    }
}

impl FederationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.local_epochs == 0 {
            return bad("local_epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr must be finite and non-negative, got {}", self.lr));
        }
        if !(self.transport.timeout_sec.is_finite() && self.transport.timeout_sec > 0.0) {
            return bad(format!("transport.timeout_sec must be positive, got {}", self.transport.timeout_sec));
        }
        if self.clients.is_empty() {
            return bad("at least one client is required".into());
        }
        let mut ids: Vec<&str> = self.clients.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate client id {:?}", w[0]));
        }
        for c in &self.clients {
            if c.id.is_empty() || c.id.len() > 255 {
                return bad(format!("client id {:?} must be 1 to 255 bytes", c.id));
            }
            if !(c.share.is_finite() && c.share > 0.0) {
                return bad(format!("client {} share must be positive, got {}", c.id, c.share));
            }
        }
        let total: f64 = self.clients.iter().map(|c| c.share).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("client shares sum to {total}, expected 1"));
        }
        aggregator_registry().get(&self.aggregation)?;
        backend_registry().get(&self.transport.mode)?;
        self.model.validate()
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.adam.beta1, beta2: self.adam.beta2, eps: self.adam.eps }
    }

    pub fn shares(&self) -> Vec<f64> {
        self.clients.iter().map(|c| c.share).collect()
    }

    pub fn timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(self.transport.timeout_sec)
    }

    /// Same run without client `id`; the remaining shares are rescaled to
    /// sum to one.
    pub fn without_client(&self, id: &str) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.clients.retain(|c| c.id != id);
        if cfg.clients.len() == self.clients.len() {
            return Err(Error::Config(format!("no client named {id:?}")));
        }
        let total: f64 = cfg.clients.iter().map(|c| c.share).sum();
        cfg.clients.iter_mut().for_each(|c| c.share /= total);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> FederationConfig {
        FederationConfig {
            clients: vec![
                ClientEntry { id: "server".into(), share: 0.5 },
                ClientEntry { id: "laptop".into(), share: 0.49 },
                ClientEntry { id: "pi".into(), share: 0.01 },
            ],
            ..FederationConfig::default()
        }
    }

    #[test]
    fn json_defaults_and_round_trip() {
        let cfg = FederationConfig::from_json(r#"{"clients":[{"id":"a","share":1.0}]}"#).unwrap();
        assert_eq!(cfg.rounds, 10);
        assert_eq!(cfg.local_epochs, 10);
        assert_eq!(cfg.aggregation, "uniform");
        assert_eq!(cfg.model, ModelSpec::default());
        assert_eq!(FederationConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = three();
        c.rounds = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = three();
        c.local_epochs = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = three();
        c.clients[2].share = 0.02;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = three();
        c.clients[1].id = "pi".into();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = three();
        c.aggregation = "median".into();
        assert!(matches!(c.validate(), Err(Error::UnknownStrategy { .. })));
        assert!(FederationConfig::from_json(r#"{"clients":[{"id":"a","share":1.0}],"bogus":1}"#).is_err());
    }

    #[test]
    fn ablation_rescales() {
        let c = three().without_client("pi").unwrap();
        assert_eq!(c.clients.len(), 2);
        assert!((c.shares().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(three().without_client("nobody").is_err());
    }
}

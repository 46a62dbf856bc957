use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{ModelParams, Tensor};
use crate::registry::{Named, Registry};

#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: String,
    pub round: u32,
    pub params: ModelParams,
    pub sample_count: u32,
    pub mean_loss: f32,
    pub accuracy: f32,
}

/// Per-client statistics without the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub client_id: String,
    pub sample_count: u32,
    pub mean_loss: f32,
    pub accuracy: f32,
}

impl From<&ClientUpdate> for ClientSummary {
    fn from(u: &ClientUpdate) -> Self {
        Self { client_id: u.client_id.clone(), sample_count: u.sample_count, mean_loss: u.mean_loss, accuracy: u.accuracy }
    }
}

/// Combines updates that are already sorted by client id and checked for
/// matching layout and round.
pub trait Aggregator: Named + Send + Sync {
    fn combine(&self, updates: &[&ClientUpdate]) -> Result<ModelParams>;
}

/// Per-scalar `Σ wᵢθᵢ / Σ wᵢ` accumulated in f64, in update order.
fn weighted_mean(updates: &[&ClientUpdate], weights: &[f64]) -> Result<ModelParams> {
    let denom: f64 = weights.iter().sum();
    if denom <= 0.0 {
        return Err(Error::Aggregation("aggregation weights sum to zero".into()));
    }
    let first = &updates[0].params;
    let tensors = first
        .tensors
        .iter()
        .enumerate()
        .map(|(ti, (name, t))| {
            let mut acc = vec![0f64; t.len()];
            for (u, &w) in updates.iter().zip(weights) {
                for (a, &v) in acc.iter_mut().zip(u.params.tensors[ti].1.data()) {
                    *a += w * f64::from(v);
                }
            }
            let data = acc.into_iter().map(|a| (a / denom) as f32).collect();
            Ok((name.clone(), Tensor::new(t.shape().to_vec(), data)?))
        })
        .collect::<Result<_>>()?;
    Ok(ModelParams::new(tensors))
}

pub struct Uniform;

impl Named for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }
}

impl Aggregator for Uniform {
    fn combine(&self, updates: &[&ClientUpdate]) -> Result<ModelParams> {
        weighted_mean(updates, &vec![1.0; updates.len()])
    }
}

pub struct SampleWeighted;

impl Named for SampleWeighted {
    fn name(&self) -> &'static str {
        "sample-weighted"
    }
}

impl Aggregator for SampleWeighted {
    fn combine(&self, updates: &[&ClientUpdate]) -> Result<ModelParams> {
        let weights: Vec<f64> = updates.iter().map(|u| f64::from(u.sample_count)).collect();
        weighted_mean(updates, &weights)
    }
}

pub fn aggregator_registry() -> Registry<dyn Aggregator> {
    let mut reg: Registry<dyn Aggregator> = Registry::new("aggregation");
    reg.register(Box::new(Uniform)).register(Box::new(SampleWeighted));
    reg
}

/// Validates `updates` and combines them in ascending client-id order.
pub fn aggregate(updates: &[ClientUpdate], mode: &dyn Aggregator) -> Result<ModelParams> {
    let first = updates.first().ok_or_else(|| Error::Aggregation("no updates to aggregate".into()))?;
    for u in updates {
        if !u.params.same_layout(&first.params) {
            return Err(Error::Aggregation(format!("update from {} has a different parameter layout", u.client_id)));
        }
        if u.round != first.round {
            return Err(Error::Aggregation(format!("update from {} is for round {}, expected {}", u.client_id, u.round, first.round)));
        }
    }
    let mut sorted: Vec<&ClientUpdate> = updates.iter().collect();
    sorted.sort_by(|a, b| a.client_id.cmp(&b.client_id));
    mode.combine(&sorted)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn update(id: &str, values: Vec<f32>, n: u32) -> ClientUpdate {
        let len = values.len();
        ClientUpdate {
            client_id: id.into(),
            round: 1,
            params: ModelParams::new(vec![("w".into(), Tensor::new(vec![len], values).unwrap())]),
            sample_count: n,
            mean_loss: 0.0,
            accuracy: 0.0,
        }
    }

    fn first(p: &ModelParams) -> f32 {
        p.tensors[0].1.data()[0]
    }

    #[test]
    fn examples() {
        let ups = [update("a", vec![2.0], 3), update("b", vec![4.0], 1)];
        assert_eq!(first(&aggregate(&ups, &Uniform).unwrap()), 3.0);
        assert_eq!(first(&aggregate(&ups, &SampleWeighted).unwrap()), 2.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(aggregate(&[], &Uniform), Err(Error::Aggregation(_))));
        let ups = [update("a", vec![1.0], 1), update("b", vec![1.0, 2.0], 1)];
        assert!(matches!(aggregate(&ups, &Uniform), Err(Error::Aggregation(_))));
        let mut late = update("b", vec![1.0], 1);
        late.round = 2;
        assert!(matches!(aggregate(&[update("a", vec![1.0], 1), late], &Uniform), Err(Error::Aggregation(_))));
        assert!(matches!(aggregate(&[update("a", vec![1.0], 0)], &SampleWeighted), Err(Error::Aggregation(_))));
    }

    #[test]
    fn registry_names() {
        assert_eq!(aggregator_registry().names(), vec!["sample-weighted", "uniform"]);
    }

    proptest! {
        #[test]
        fn identical_copies_are_fixed_points(values in proptest::collection::vec(-1e6f32..1e6, 1..40), k in 1usize..12) {
            let ups: Vec<ClientUpdate> = (0..k).map(|i| update(&format!("c{i}"), values.clone(), 7)).collect();
            let out = aggregate(&ups, &Uniform).unwrap();
            prop_assert!(out.bitwise_eq(&ups[0].params));
        }

        #[test]
        fn equal_counts_make_modes_agree(rows in proptest::collection::vec(proptest::collection::vec(-10f32..10.0, 8), 1..6), n in 1u32..1000) {
            let ups: Vec<ClientUpdate> = rows.iter().enumerate().map(|(i, r)| update(&format!("c{i}"), r.clone(), n)).collect();
            let u = aggregate(&ups, &Uniform).unwrap();
            let w = aggregate(&ups, &SampleWeighted).unwrap();
            prop_assert!(u.max_abs_diff(&w) <= 1e-7);
        }

        #[test]
        fn order_does_not_matter(rows in proptest::collection::vec(proptest::collection::vec(-10f32..10.0, 4), 2..6)) {
            let ups: Vec<ClientUpdate> = rows.iter().enumerate().map(|(i, r)| update(&format!("c{i}"), r.clone(), i as u32 + 1)).collect();
            let mut rev = ups.clone();
            rev.reverse();
            for mode in [&Uniform as &dyn Aggregator, &SampleWeighted] {
                prop_assert!(aggregate(&ups, mode).unwrap().bitwise_eq(&aggregate(&rev, mode).unwrap()));
            }
        }
    }
}

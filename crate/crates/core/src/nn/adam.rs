use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f32>>,
    second: Vec<Vec<f32>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f32>> = params.tensors.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Self { config, step: 0, first: zeros.clone(), second: zeros }
    }

    pub fn first_moments(&self) -> &[Vec<f32>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f32>] {
        &self.second
    }
}

/// One bias-corrected Adam update of `params` along `grads`.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState) -> Result<()> {
    if !params.same_layout(grads) {
        return Err(Error::Shape("gradient layout differs from parameters".into()));
    }
    if state.first.len() != params.tensors.len()
        || state.first.iter().zip(&params.tensors).any(|(m, (_, t))| m.len() != t.len())
    {
        return Err(Error::Shape("optimizer state does not match parameters".into()));
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let bias1 = (1.0 - f64::from(beta1).powi(t)) as f32;
    let bias2 = (1.0 - f64::from(beta2).powi(t)) as f32;

    for (((_, p), (_, g)), (m, v)) in params
        .tensors
        .iter_mut()
        .zip(&grads.tensors)
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
    {
        for (((w, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

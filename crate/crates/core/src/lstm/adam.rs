use serde::{Deserialize, Serialize};

use super::model::{Gradients, LstmModel};
use crate::error::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for every parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zero moments for blocks of the given lengths.
    pub fn new(config: AdamConfig, block_lens: &[usize]) -> Self {
        AdamState {
            config,
            step: 0,
            first: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_model(config: AdamConfig, model: &LstmModel) -> Self {
        let lens: Vec<usize> = model.blocks().iter().map(|(_, b)| b.len()).collect();
        Self::new(config, &lens)
    }

    /// One bias-corrected Adam update. Gradients are checked for finiteness
    /// before anything is modified.
    pub fn update(
        &mut self,
        params: &mut [(&'static str, &mut [f64])],
        grads: &[(&'static str, &[f64])],
    ) -> Result<(), ModelError> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(ModelError::Shape("parameter block count mismatch".into()));
        }
        for (((name, p), (_, g)), m) in params.iter().zip(grads).zip(&self.first) {
            if p.len() != g.len() || p.len() != m.len() {
                return Err(ModelError::Shape(format!("block `{name}` has inconsistent lengths")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteGradient(name));
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (k, ((_, p), (_, g))) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Applies one Adam update to every model parameter.
pub fn adam_step(model: &mut LstmModel, grads: &Gradients, state: &mut AdamState) -> Result<(), ModelError> {
    let mut params = model.blocks_mut();
    state.update(&mut params, &grads.blocks())
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{Gradients, LstmModel, Mode};
use crate::error::ModelError;
use crate::losses::{batch_loss, LossSpec};
use crate::timeseries::WindowedSample;

/// Mixed into the model seed for the dropout stream so that initialization
/// and masks draw from different sequences.
const DROPOUT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Gradient-norm threshold used when clipping is switched on.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub loss: LossSpec,
    pub adam: AdamConfig,
    /// Rescale batch gradients whose norm exceeds this value.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            shuffle_seed: 0,
            loss: LossSpec::default(),
            adam: AdamConfig::default(),
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(ModelError::Config("clip_norm must be positive".into()));
            }
        }
        self.loss.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: LstmModel,
    /// Mean per-sample training loss of each epoch, measured before each
    /// batch's update.
    pub loss_trace: Vec<f64>,
    pub optimizer: AdamState,
}

/// Mini-batch training with Adam. Each epoch visits the samples in a fresh
/// order drawn from `shuffle_seed`; dropout masks come from the model seed.
/// Results are bitwise reproducible for fixed seeds.
pub fn train(
    mut model: LstmModel,
    samples: &[WindowedSample],
    config: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(model.config.seed ^ DROPOUT_STREAM);
    let mut optimizer = AdamState::for_model(config.adam, &model);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sum = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let masks: Vec<_> = batch
                .iter()
                .map(|&i| model.sample_masks(&mut dropout_rng, samples[i].width()))
                .collect();
            let forwards = batch
                .par_iter()
                .zip(&masks)
                .map(|(&i, m)| model.forward(&samples[i].inputs, Mode::Train(m)))
                .collect::<Result<Vec<_>, _>>()?;
            let errors: Vec<f64> = forwards
                .iter()
                .zip(batch)
                .map(|((p, _), &i)| p - samples[i].target)
                .collect();
            let loss = batch_loss(&errors, &config.loss)?;
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            epoch_sum += loss * batch.len() as f64;

            let scale = 1.0 / batch.len() as f64;
            let per_sample = forwards
                .par_iter()
                .zip(&errors)
                .map(|((_, cache), &e)| model.backward(cache, config.loss.grad(e) * scale))
                .collect::<Result<Vec<_>, _>>()?;
            let mut grads = Gradients::zeros(&model);
            for g in &per_sample {
                grads.add_assign(g);
            }
            if let Some(limit) = config.clip_norm {
                let norm = grads.norm();
                if norm > limit {
                    grads.scale(limit / norm);
                }
            }
            adam_step(&mut model, &grads, &mut optimizer)?;
        }
        let epoch_loss = epoch_sum / samples.len() as f64;
        log::debug!("epoch {epoch}: loss {epoch_loss:.6}");
        loss_trace.push(epoch_loss);
    }
    Ok(TrainOutcome {
        model,
        loss_trace,
        optimizer,
    })
}

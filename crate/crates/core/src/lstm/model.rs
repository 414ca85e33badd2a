use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layer::{LayerCache, LayerGrads, LstmLayer};
use crate::error::ModelError;
use crate::timeseries::{WindowedSample, FEATURE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Identity,
    Relu,
}

/// Architecture and initialization seed of an [`LstmModel`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub input_size: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub dropout: f64,
    pub activation: OutputActivation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_size: FEATURE_COUNT,
            hidden1: 64,
            hidden2: 32,
            dropout: 0.2,
            activation: OutputActivation::Identity,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_size == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(ModelError::Config("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Two stacked LSTM layers, each followed by dropout, and a dense head on
/// the last hidden state of the second layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmModel {
    pub config: ModelConfig,
    pub layer1: LstmLayer,
    pub layer2: LstmLayer,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

/// Inverted-dropout masks: each entry is 0 or `1 / (1 - p)`. `layer1` covers
/// the whole first-layer output sequence, `layer2` the final second-layer
/// state.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks {
    pub layer1: Vec<f64>,
    pub layer2: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    Train(&'a DropoutMasks),
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCache {
    pub layer1: LayerCache,
    pub layer2: LayerCache,
    pub masks: Option<DropoutMasks>,
    /// First-layer output after dropout, the second layer's input.
    pub layer1_out: Vec<f64>,
    /// Final second-layer state after dropout, the head's input.
    pub head_in: Vec<f64>,
    pub pre_activation: f64,
    pub prediction: f64,
}

/// Gradients laid out like the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layer1: LayerGrads,
    pub layer2: LayerGrads,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

pub const BLOCK_NAMES: [&str; 8] = [
    "lstm1.w", "lstm1.u", "lstm1.b", "lstm2.w", "lstm2.u", "lstm2.b", "head.w", "head.b",
];

impl Gradients {
    pub fn zeros(model: &LstmModel) -> Self {
        Gradients {
            layer1: LayerGrads::zeros(&model.layer1),
            layer2: LayerGrads::zeros(&model.layer2),
            head_w: vec![0.0; model.head_w.len()],
            head_b: vec![0.0; 1],
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.layer1.add_assign(&other.layer1);
        self.layer2.add_assign(&other.layer2);
        for (a, b) in self.head_w.iter_mut().chain(&mut self.head_b).zip(other.head_w.iter().chain(&other.head_b)) {
            *a += b;
        }
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 8] {
        [
            (BLOCK_NAMES[0], &self.layer1.w),
            (BLOCK_NAMES[1], &self.layer1.u),
            (BLOCK_NAMES[2], &self.layer1.b),
            (BLOCK_NAMES[3], &self.layer2.w),
            (BLOCK_NAMES[4], &self.layer2.u),
            (BLOCK_NAMES[5], &self.layer2.b),
            (BLOCK_NAMES[6], &self.head_w),
            (BLOCK_NAMES[7], &self.head_b),
        ]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.layer1.w,
            &mut self.layer1.u,
            &mut self.layer1.b,
            &mut self.layer2.w,
            &mut self.layer2.u,
            &mut self.layer2.b,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|(_, b)| b.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|g| *g *= factor);
        }
    }
}

impl LstmModel {
    /// Seeded Glorot-uniform initialization.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let layer1 = LstmLayer::init(config.input_size, config.hidden1, &mut rng);
        let layer2 = LstmLayer::init(config.hidden1, config.hidden2, &mut rng);
        let limit = (6.0 / (config.hidden2 + 1) as f64).sqrt();
        let head_w = (0..config.hidden2).map(|_| rng.gen_range(-limit..limit)).collect();
        Ok(LstmModel {
            config,
            layer1,
            layer2,
            head_w,
            head_b: vec![0.0],
        })
    }

    /// All parameters zero.
    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        Ok(LstmModel {
            config,
            layer1: LstmLayer::zeros(config.input_size, config.hidden1),
            layer2: LstmLayer::zeros(config.hidden1, config.hidden2),
            head_w: vec![0.0; config.hidden2],
            head_b: vec![0.0],
        })
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 8] {
        [
            (BLOCK_NAMES[0], &self.layer1.w),
            (BLOCK_NAMES[1], &self.layer1.u),
            (BLOCK_NAMES[2], &self.layer1.b),
            (BLOCK_NAMES[3], &self.layer2.w),
            (BLOCK_NAMES[4], &self.layer2.u),
            (BLOCK_NAMES[5], &self.layer2.b),
            (BLOCK_NAMES[6], &self.head_w),
            (BLOCK_NAMES[7], &self.head_b),
        ]
    }

    pub fn blocks_mut(&mut self) -> [(&'static str, &mut [f64]); 8] {
        [
            (BLOCK_NAMES[0], &mut self.layer1.w),
            (BLOCK_NAMES[1], &mut self.layer1.u),
            (BLOCK_NAMES[2], &mut self.layer1.b),
            (BLOCK_NAMES[3], &mut self.layer2.w),
            (BLOCK_NAMES[4], &mut self.layer2.u),
            (BLOCK_NAMES[5], &mut self.layer2.b),
            (BLOCK_NAMES[6], &mut self.head_w),
            (BLOCK_NAMES[7], &mut self.head_b),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    /// Draws fresh dropout masks for a window of `steps` hours.
    pub fn sample_masks<R: Rng>(&self, rng: &mut R, steps: usize) -> DropoutMasks {
        let p = self.config.dropout;
        let keep = 1.0 / (1.0 - p);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if p > 0.0 && rng.gen::<f64>() < p { 0.0 } else { keep })
                .collect()
        };
        let layer1 = draw(steps * self.config.hidden1);
        let layer2 = draw(self.config.hidden2);
        DropoutMasks { layer1, layer2 }
    }

    fn check_input(&self, inputs: &[f64]) -> Result<usize, ModelError> {
        let n_in = self.config.input_size;
        if inputs.is_empty() || !inputs.len().is_multiple_of(n_in) {
            return Err(ModelError::Shape(format!(
                "input of length {} is not a non-empty multiple of {n_in} features",
                inputs.len()
            )));
        }
        Ok(inputs.len() / n_in)
    }

    /// Forward pass over one window (`steps x input_size`, row-major).
    /// Dropout applies only in [`Mode::Train`].
    pub fn forward(&self, inputs: &[f64], mode: Mode<'_>) -> Result<(f64, ForwardCache), ModelError> {
        let steps = self.check_input(inputs)?;
        let (h1, h2) = (self.config.hidden1, self.config.hidden2);
        let masks = match mode {
            Mode::Train(m) => {
                if m.layer1.len() != steps * h1 || m.layer2.len() != h2 {
                    return Err(ModelError::Shape("dropout masks do not match the window".into()));
                }
                Some(m.clone())
            }
            Mode::Eval => None,
        };

        let layer1 = self.layer1.forward(inputs);
        let mut layer1_out = layer1.h.clone();
        if let Some(m) = &masks {
            layer1_out.iter_mut().zip(&m.layer1).for_each(|(v, k)| *v *= k);
        }
        let layer2 = self.layer2.forward(&layer1_out);
        let mut head_in = layer2.h[(steps - 1) * h2..].to_vec();
        if let Some(m) = &masks {
            head_in.iter_mut().zip(&m.layer2).for_each(|(v, k)| *v *= k);
        }
        let pre_activation =
            self.head_b[0] + head_in.iter().zip(&self.head_w).map(|(a, b)| a * b).sum::<f64>();
        let prediction = match self.config.activation {
            OutputActivation::Identity => pre_activation,
            OutputActivation::Relu => pre_activation.max(0.0),
        };
        let cache = ForwardCache {
            layer1,
            layer2,
            masks,
            layer1_out,
            head_in,
            pre_activation,
            prediction,
        };
        Ok((prediction, cache))
    }

    /// Gradients of `d_prediction * prediction` with respect to every
    /// parameter, reusing the masks recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, d_prediction: f64) -> Result<Gradients, ModelError> {
        let (h1, h2) = (self.config.hidden1, self.config.hidden2);
        let steps = cache.layer1.steps;
        let consistent = cache.layer2.steps == steps
            && cache.layer1.h.len() == steps * h1
            && cache.layer2.h.len() == steps * h2
            && cache.layer1.x.len() == steps * self.config.input_size
            && cache.head_in.len() == h2;
        if !consistent || steps == 0 {
            return Err(ModelError::Shape("cache does not belong to this model".into()));
        }

        let mut grads = Gradients::zeros(self);
        let d_pre = match self.config.activation {
            OutputActivation::Identity => d_prediction,
            OutputActivation::Relu if cache.pre_activation > 0.0 => d_prediction,
            OutputActivation::Relu => 0.0,
        };
        if d_pre == 0.0 {
            return Ok(grads);
        }
        grads.head_b[0] = d_pre;
        for (g, x) in grads.head_w.iter_mut().zip(&cache.head_in) {
            *g = d_pre * x;
        }

        let mut dh2 = vec![0.0; steps * h2];
        for k in 0..h2 {
            let mask = cache.masks.as_ref().map_or(1.0, |m| m.layer2[k]);
            dh2[(steps - 1) * h2 + k] = d_pre * self.head_w[k] * mask;
        }
        let mut dh1 = self.layer2.backward(&cache.layer2, &dh2, &mut grads.layer2);
        if let Some(m) = &cache.masks {
            dh1.iter_mut().zip(&m.layer1).for_each(|(g, k)| *g *= k);
        }
        self.layer1.backward(&cache.layer1, &dh1, &mut grads.layer1);
        Ok(grads)
    }

    pub fn predict_one(&self, inputs: &[f64]) -> Result<f64, ModelError> {
        self.forward(inputs, Mode::Eval).map(|(p, _)| p)
    }

    /// Eval-mode predictions in sample order.
    pub fn predict(&self, samples: &[WindowedSample]) -> Result<Vec<f64>, ModelError> {
        samples
            .par_iter()
            .map(|s| self.predict_one(&s.inputs))
            .collect()
    }
}

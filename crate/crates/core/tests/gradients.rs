//! Finite-difference checks for the loss subgradients and for backpropagation
//! through the LSTM.

mod common;

use common::{worst_lstm_gradient_error, worst_loss_gradient_error};
use loadcast::losses::{LossKind, LossSpec};
use loadcast::lstm::{LstmModel, Mode, ModelConfig};
use loadcast::timeseries::FEATURE_COUNT;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[test]
fn loss_gradients_match_central_differences() {
    for kind in LossKind::ALL {
        let worst = worst_loss_gradient_error(kind, 7);
        assert!(worst <= 1e-6, "{kind}: worst relative error {worst:e}");
    }
}

#[test]
fn lstm_gradients_match_central_differences() {
    for kind in LossKind::ALL {
        let spec = LossSpec::new(kind);
        for seed in 0..10 {
            let worst = worst_lstm_gradient_error(&spec, seed);
            assert!(worst <= 1e-4, "{kind} sample {seed}: relative error {worst:e}");
        }
    }
}

#[test]
fn dropout_expectation_matches_eval() {
    let config = ModelConfig { hidden1: 6, hidden2: 4, dropout: 0.3, seed: 4, ..Default::default() };
    let model = LstmModel::new(config).unwrap();
    let x: Vec<f64> = (0..4 * FEATURE_COUNT).map(|i| (i as f64 * 0.21).cos()).collect();
    let (_, eval) = model.forward(&x, Mode::Eval).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 20_000;
    let mut mean = vec![0.0; eval.layer1_out.len()];
    for _ in 0..draws {
        let masks = model.sample_masks(&mut rng, 4);
        let (_, cache) = model.forward(&x, Mode::Train(&masks)).unwrap();
        for (m, v) in mean.iter_mut().zip(&cache.layer1_out) {
            *m += v / draws as f64;
        }
    }
    for (m, e) in mean.iter().zip(&eval.layer1_out) {
        assert!((m - e).abs() <= 0.02 * e.abs(), "masked mean {m} vs eval {e}");
    }
}

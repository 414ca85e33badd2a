//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use chrono::{Duration, NaiveDate, NaiveDateTime};
use loadcast::anomaly::NOISE;
use loadcast::losses::{loss_grad, LossKind, LossSpec};
use loadcast::lstm::{LstmModel, Mode, ModelConfig};
use loadcast::timeseries::{HourlyRecord, RobustScalerParams, SeasonId, SeasonalDataset, FEATURE_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hand-evaluated loss values: (kind, error, expected loss) with a=5, b=2,
/// eps1=0.005, eps2=0.01.
pub const LOSS_VALUES: &[(LossKind, f64, f64)] = &[
    (LossKind::Mse, 0.0, 0.0),
    (LossKind::Mse, -0.5, 0.25),
    (LossKind::Mse, 2.0, 4.0),
    (LossKind::Al1, 0.0, 0.0),
    (LossKind::Al1, -0.5, 2.5),
    (LossKind::Al1, -2.0, 20.0),
    (LossKind::Al1, 0.5, 0.5),
    (LossKind::Al1, 2.0, 4.0),
    (LossKind::Al2, -0.5, 2.5),
    (LossKind::Al2, 0.003, 0.0),
    (LossKind::Al2, 0.007, 9.8e-5),
    (LossKind::Al2, 0.5, 1.0),
];

/// Batch means: (kind, errors, expected mean loss).
pub const BATCH_VALUES: &[(LossKind, &[f64], f64)] = &[
    (LossKind::Al1, &[-0.5, 0.5], 1.5),
    (LossKind::Al1, &[0.0, 0.0, 0.0], 0.0),
    (LossKind::Al2, &[0.0, 0.0, 0.0], 0.0),
    (LossKind::Mse, &[0.0, 0.0, 0.0], 0.0),
    (LossKind::Al1, &[-1.0], 5.0),
];

/// Derivatives: (kind, error, expected dloss/de).
pub const GRAD_VALUES: &[(LossKind, f64, f64)] = &[
    (LossKind::Mse, 0.3, 0.6),
    (LossKind::Al1, -0.5, -5.0),
    (LossKind::Al1, -2.0, -20.0),
    (LossKind::Al2, 0.003, 0.0),
];

pub fn spec(kind: LossKind) -> LossSpec {
    LossSpec::new(kind)
}

/// Textbook DBSCAN: visit points in input order, grow each new cluster from
/// its seed with a queue, O(n^2) neighborhood queries.
pub fn brute_dbscan(points: &[f64], eps: f64, min_samples: usize) -> Vec<i32> {
    const UNSEEN: i32 = -2;
    let n = points.len();
    let neighbors = |p: usize| -> Vec<usize> { (0..n).filter(|&q| (points[p] - points[q]).abs() <= eps).collect() };
    let mut labels = vec![UNSEEN; n];
    let mut cluster = 0;
    for p in 0..n {
        if labels[p] != UNSEEN {
            continue;
        }
        let hood = neighbors(p);
        if hood.len() < min_samples {
            labels[p] = NOISE;
            continue;
        }
        labels[p] = cluster;
        let mut queue: std::collections::VecDeque<usize> = hood.into_iter().filter(|&q| q != p).collect();
        while let Some(q) = queue.pop_front() {
            if labels[q] == NOISE {
                labels[q] = cluster;
            }
            if labels[q] != UNSEEN {
                continue;
            }
            labels[q] = cluster;
            let hq = neighbors(q);
            if hq.len() >= min_samples {
                queue.extend(hq);
            }
        }
        cluster += 1;
    }
    labels
}

/// Random 1-D instance mixing dense blobs, isolated points and exact ties.
pub fn random_points(rng: &mut impl Rng, max_n: usize) -> Vec<f64> {
    let n = rng.gen_range(0..=max_n);
    let blobs: Vec<f64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let v = match rng.gen_range(0..10) {
            0 => rng.gen_range(-5.0..5.0),
            1 if !pts.is_empty() => pts[rng.gen_range(0..pts.len())],
            _ => blobs[rng.gen_range(0..blobs.len())] + rng.gen_range(-0.15..0.15),
        };
        // Quantize so that distances exactly equal to eps occur.
        pts.push((v * 100.0_f64).round() / 100.0);
    }
    pts
}

pub fn t0() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2016, 1, 4).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

/// Hourly records from `start`, one per offset, with simple feature values.
pub fn records_at(start: NaiveDateTime, offsets: &[i64]) -> Vec<HourlyRecord> {
    offsets
        .iter()
        .map(|&h| {
            let mut r = HourlyRecord::new(start + Duration::hours(h));
            r.consumption = (h as f64 * 0.37).sin();
            r.temperature = (h as f64 * 0.11).cos();
            r.radiation_direct = 0.0;
            r.radiation_diffuse = 0.1;
            r
        })
        .collect()
}

pub fn dataset_from(records: Vec<HourlyRecord>) -> SeasonalDataset {
    SeasonalDataset::new(SeasonId::All, records, RobustScalerParams::identity(2018))
}

pub fn boundaries(spec: &LossSpec) -> Vec<f64> {
    match spec.kind {
        LossKind::Mse => vec![],
        LossKind::Al1 => vec![-1.0, 0.0, 1.0],
        LossKind::Al2 => vec![0.0, spec.eps1, spec.eps2],
    }
}

/// Draws `e` from [-3, 3] at least `margin` away from every branch edge.
pub fn sample_error(rng: &mut impl Rng, spec: &LossSpec, margin: f64) -> f64 {
    loop {
        // Half the draws near zero so the AL2 dead zone and quadratic band
        // are actually exercised.
        let e = if rng.gen_bool(0.5) {
            rng.gen_range(-0.05..0.05)
        } else {
            rng.gen_range(-3.0..3.0)
        };
        if boundaries(spec).iter().all(|b| (e - b).abs() > margin) {
            return e;
        }
    }
}

pub fn toy_model(seed: u64) -> LstmModel {
    let config = ModelConfig {
        input_size: FEATURE_COUNT,
        hidden1: 3,
        hidden2: 2,
        dropout: 0.0,
        seed,
        ..Default::default()
    };
    let mut model = LstmModel::new(config).unwrap();
    // Nonzero biases so that every gate path carries gradient.
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for (_, block) in model.blocks_mut() {
        for v in block.iter_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    model
}

fn sample_loss(model: &LstmModel, x: &[f64], target: f64, spec: &LossSpec) -> f64 {
    spec.value(model.predict_one(x).unwrap() - target)
}

/// Worst relative error between backpropagated and central-difference
/// gradients over every parameter of the toy network.
pub fn worst_lstm_gradient_error(spec: &LossSpec, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = toy_model(seed);
    let x: Vec<f64> = (0..4 * FEATURE_COUNT).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let prediction = model.predict_one(&x).unwrap();
    // Place the error well inside one branch so no perturbation crosses an edge.
    let e = sample_error(&mut rng, spec, 2e-3);
    let target = prediction - e;

    let (_, cache) = model.forward(&x, Mode::Eval).unwrap();
    let analytic = model.backward(&cache, loss_grad(e, spec)).unwrap();
    let analytic: Vec<Vec<f64>> = analytic.blocks().iter().map(|(_, b)| b.to_vec()).collect();

    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let original = model.blocks()[k].1[j];
            model.blocks_mut()[k].1[j] = original + step;
            let up = sample_loss(&model, &x, target, spec);
            model.blocks_mut()[k].1[j] = original - step;
            let down = sample_loss(&model, &x, target, spec);
            model.blocks_mut()[k].1[j] = original;
            let numeric = (up - down) / (2.0 * step);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(err);
        }
    }
    worst
}

/// Worst relative error of the analytic loss derivative against central
/// differences over 1000 draws.
pub fn worst_loss_gradient_error(kind: LossKind, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = LossSpec::new(kind);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let e = sample_error(&mut rng, &spec, 1e-4);
        let numeric = (spec.value(e + h) - spec.value(e - h)) / (2.0 * h);
        let analytic = loss_grad(e, &spec);
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(1.0));
    }
    worst
}

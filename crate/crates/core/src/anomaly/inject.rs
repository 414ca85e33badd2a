use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AnomalyError;
use crate::timeseries::SeasonalDataset;

/// Controlled corruption of scaled consumption for detection experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionSpec {
    /// Fraction of records to corrupt.
    pub rate: f64,
    pub seed: u64,
    /// Fraction of injections placed at the coldest hours; the rest are
    /// uniform over the remaining records.
    pub weather_share: f64,
    /// Offset in scaled units, added with a random sign.
    pub magnitude: f64,
}

impl Default for InjectionSpec {
    fn default() -> Self {
        InjectionSpec {
            rate: 0.01,
            seed: 0,
            weather_share: 0.5,
            magnitude: 6.0,
        }
    }
}

impl InjectionSpec {
    pub fn validate(&self) -> Result<(), AnomalyError> {
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(AnomalyError::InvalidInjection(format!(
                "rate {} outside (0, 1)",
                self.rate
            )));
        }
        if !(0.0..=1.0).contains(&self.weather_share) {
            return Err(AnomalyError::InvalidInjection(format!(
                "weather_share {} outside [0, 1]",
                self.weather_share
            )));
        }
        if !self.magnitude.is_finite() {
            return Err(AnomalyError::InvalidInjection("magnitude must be finite".into()));
        }
        Ok(())
    }
}

/// Shifts `floor(rate * N)` consumption values by `±magnitude` and returns
/// the corrupted indices. Holidays are never corrupted, since the detector
/// exempts them by rule.
pub fn inject_outliers(
    mut dataset: SeasonalDataset,
    spec: &InjectionSpec,
) -> Result<(SeasonalDataset, BTreeSet<usize>), AnomalyError> {
    spec.validate()?;
    let n = dataset.len();
    let count = (spec.rate * n as f64).floor() as usize;
    if count < 1 {
        return Err(AnomalyError::TooFewRecords {
            rate: spec.rate,
            records: n,
        });
    }
    let mut candidates: Vec<usize> = (0..n).filter(|&i| !dataset.records[i].is_holiday).collect();
    if candidates.len() < count {
        return Err(AnomalyError::TooFewRecords {
            rate: spec.rate,
            records: candidates.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_weather = ((spec.weather_share * count as f64).round() as usize).min(count);

    candidates.sort_by(|&a, &b| {
        dataset.records[a]
            .temperature
            .total_cmp(&dataset.records[b].temperature)
            .then(a.cmp(&b))
    });
    let mut chosen: BTreeSet<usize> = candidates[..n_weather].iter().copied().collect();
    let rest = &candidates[n_weather..];
    let mut random: Vec<usize> = index::sample(&mut rng, rest.len(), count - n_weather)
        .into_iter()
        .map(|k| rest[k])
        .collect();
    random.sort_unstable();
    chosen.extend(random);

    for &i in &chosen {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        dataset.records[i].consumption += sign * spec.magnitude;
    }
    Ok((dataset, chosen))
}

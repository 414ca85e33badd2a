use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{Feature, MultiSeries};
use crate::error::DataError;

/// Per-feature median and interquartile range, indexed by [`Feature::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustScalerParams {
    pub median: [f64; 4],
    pub iqr: [f64; 4],
    /// Records in years up to and including this one were used for fitting.
    pub train_cutoff_year: i32,
    /// Features whose fitted IQR was zero and replaced by 1.0.
    #[serde(default)]
    pub degenerate: Vec<Feature>,
}

impl RobustScalerParams {
    /// Parameters that leave every feature unchanged.
    pub fn identity(train_cutoff_year: i32) -> Self {
        RobustScalerParams {
            median: [0.0; 4],
            iqr: [1.0; 4],
            train_cutoff_year,
            degenerate: Vec::new(),
        }
    }

    pub fn transform(&self, feature: Feature, x: f64) -> f64 {
        let i = feature.index();
        (x - self.median[i]) / self.iqr[i]
    }

    pub fn inverse(&self, feature: Feature, x: f64) -> f64 {
        let i = feature.index();
        x * self.iqr[i] + self.median[i]
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (position `q * (n - 1)`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fits median and IQR of every continuous feature on records from years
/// `<= train_cutoff_year`. A zero IQR is replaced by 1.0 and reported in
/// [`RobustScalerParams::degenerate`].
pub fn fit_robust_scaler(
    series: &MultiSeries,
    train_cutoff_year: i32,
) -> Result<RobustScalerParams, DataError> {
    let train: Vec<_> = series
        .records
        .iter()
        .filter(|r| r.timestamp.year() <= train_cutoff_year)
        .collect();
    if train.len() < 4 {
        return Err(DataError::TooFewTrainingRecords {
            cutoff: train_cutoff_year,
            found: train.len(),
        });
    }

    let mut params = RobustScalerParams::identity(train_cutoff_year);
    for feature in Feature::ALL {
        let mut values: Vec<f64> = train
            .iter()
            .map(|r| r.get(feature))
            .filter(|v| v.is_finite())
            .collect();
        if values.is_empty() {
            params.degenerate.push(feature);
            log::warn!("feature {} has no finite training values", feature.name());
            continue;
        }
        values.sort_by(f64::total_cmp);
        let i = feature.index();
        params.median[i] = quantile(&values, 0.5);
        let iqr = quantile(&values, 0.75) - quantile(&values, 0.25);
        if iqr > 0.0 {
            params.iqr[i] = iqr;
        } else {
            params.iqr[i] = 1.0;
            params.degenerate.push(feature);
            log::warn!(
                "feature {} has zero IQR; passing it through centered",
                feature.name()
            );
        }
    }
    Ok(params)
}

/// Scales every continuous feature; calendar flags are untouched.
pub fn apply_scaler(mut series: MultiSeries, params: &RobustScalerParams) -> MultiSeries {
    for r in &mut series.records {
        for feature in Feature::ALL {
            let v = params.transform(feature, r.get(feature));
            r.set(feature, v);
        }
    }
    series
}

/// Maps a scaled consumption value back to raw units.
pub fn invert_scaler(value: f64, params: &RobustScalerParams) -> f64 {
    params.inverse(Feature::Consumption, value)
}

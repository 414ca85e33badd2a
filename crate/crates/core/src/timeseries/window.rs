use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{SeasonalDataset, FEATURE_COUNT};
use crate::error::DataError;

/// `width` consecutive hours of features and the consumption of the
/// following hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedSample {
    /// Row-major `width x FEATURE_COUNT` matrix.
    pub inputs: Vec<f64>,
    pub target: f64,
    pub target_time: NaiveDateTime,
    /// Index of the target record in its dataset.
    pub target_index: usize,
}

impl WindowedSample {
    pub fn width(&self) -> usize {
        self.inputs.len() / FEATURE_COUNT
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.inputs[t * FEATURE_COUNT..(t + 1) * FEATURE_COUNT]
    }
}

/// Slides a window of `width` hours over every contiguous segment of the
/// dataset. Windows never cross a gap between segments, so a segment of `n`
/// hours yields `n - width` samples (none when `n <= width`).
pub fn make_windows(dataset: &SeasonalDataset, width: usize) -> Result<Vec<WindowedSample>, DataError> {
    if width == 0 {
        return Err(DataError::ZeroWindow);
    }
    let rows: Vec<[f64; FEATURE_COUNT]> = dataset.records.iter().map(|r| r.features()).collect();
    let mut out = Vec::new();
    for seg in dataset.segments() {
        if seg.len() <= width {
            continue;
        }
        for start in seg.start..seg.end - width {
            let target_index = start + width;
            let inputs = rows[start..target_index].iter().flatten().copied().collect();
            out.push(WindowedSample {
                inputs,
                target: dataset.records[target_index].consumption,
                target_time: dataset.records[target_index].timestamp,
                target_index,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct TrainTestSplit {
    pub train: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
    pub warnings: Vec<String>,
}

/// Samples whose target falls in `test_year` form the test set; all others
/// are training samples.
pub fn split_train_test(samples: Vec<WindowedSample>, test_year: i32) -> TrainTestSplit {
    let (test, train): (Vec<_>, Vec<_>) = samples
        .into_iter()
        .partition(|s| s.target_time.year() == test_year);
    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push("training set is empty".to_string());
    }
    if test.is_empty() {
        warnings.push(format!("test set is empty: no targets in {test_year}"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    TrainTestSplit {
        train,
        test,
        warnings,
    }
}

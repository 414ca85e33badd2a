use chrono::Duration;

use super::calendar::set_flags;
use super::{Feature, HourlyRecord, MultiSeries, HOURS_PER_WEEK};
use crate::error::DataError;

/// Longest run of missing hours that is linearly interpolated. Longer runs
/// are copied from the same hour one week earlier (or later).
pub const MAX_INTERPOLATED_GAP: usize = 6;

/// Completes the hourly grid between the first and last timestamp and fills
/// every missing continuous value. Calendar flags are recomputed from the
/// series' holiday set.
pub fn fill_missing(series: MultiSeries) -> Result<MultiSeries, DataError> {
    let present = series
        .records
        .iter()
        .filter(|r| r.consumption.is_finite())
        .count();
    if present < 2 {
        return Err(DataError::TooFewValues {
            needed: 2,
            found: present,
        });
    }

    let MultiSeries {
        records,
        origin,
        holidays,
    } = series;
    let first = records[0].timestamp;
    let last = records[records.len() - 1].timestamp;
    let hours = (last - first).num_hours() as usize + 1;

    let mut grid: Vec<HourlyRecord> = (0..hours)
        .map(|h| HourlyRecord::new(first + Duration::hours(h as i64)))
        .collect();
    for r in records {
        let offset = (r.timestamp - first).num_hours();
        // Off-grid (sub-hourly) timestamps are not representable; skip them.
        if r.timestamp == first + Duration::hours(offset) {
            grid[offset as usize] = r;
        }
    }
    for r in &mut grid {
        set_flags(r, &holidays);
    }

    for feature in Feature::ALL {
        let mut values: Vec<f64> = grid.iter().map(|r| r.get(feature)).collect();
        fill_feature(&mut values);
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Unfillable {
                feature: feature.name(),
                at: grid[i].timestamp,
            });
        }
        for (r, v) in grid.iter_mut().zip(values) {
            r.set(feature, v);
        }
    }

    Ok(MultiSeries {
        records: grid,
        origin,
        holidays,
    })
}

fn fill_feature(values: &mut [f64]) {
    interpolate_short_gaps(values);
    let week = HOURS_PER_WEEK as usize;
    for i in week..values.len() {
        if !values[i].is_finite() && values[i - week].is_finite() {
            values[i] = values[i - week];
        }
    }
    for i in (0..values.len().saturating_sub(week)).rev() {
        if !values[i].is_finite() && values[i + week].is_finite() {
            values[i] = values[i + week];
        }
    }
}

fn interpolate_short_gaps(values: &mut [f64]) {
    let n = values.len();
    let mut i = 0;
    while i < n {
        if values[i].is_finite() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !values[i].is_finite() {
            i += 1;
        }
        let len = i - start;
        if start == 0 || i == n || len > MAX_INTERPOLATED_GAP {
            continue;
        }
        let left = values[start - 1];
        let right = values[i];
        let span = (len + 1) as f64;
        for (k, v) in values[start..i].iter_mut().enumerate() {
            let frac = (k + 1) as f64 / span;
            *v = left + (right - left) * frac;
        }
    }
}

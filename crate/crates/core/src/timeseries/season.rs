use chrono::{Datelike, NaiveDateTime};

use super::{MultiSeries, RobustScalerParams, SeasonId, SeasonalDataset};

/// Season of a timestamp: S1 is Jan 1 to Apr 14, S2 is Apr 15 to Oct 14 and
/// S3 is Oct 15 to Dec 31 (all inclusive, whole days).
pub fn season_of(ts: NaiveDateTime) -> SeasonId {
    match (ts.month(), ts.day()) {
        (1..=3, _) | (4, 1..=14) => SeasonId::S1,
        (4, _) | (5..=9, _) | (10, 1..=14) => SeasonId::S2,
        _ => SeasonId::S3,
    }
}

/// Partitions an (already scaled) series into the three seasonal datasets.
/// Each dataset concatenates its year segments in time order.
pub fn split_seasons(series: &MultiSeries, scaler: &RobustScalerParams) -> [SeasonalDataset; 3] {
    SeasonId::SPLIT.map(|season| {
        let records = series
            .records
            .iter()
            .filter(|r| season_of(r.timestamp) == season)
            .cloned()
            .collect();
        SeasonalDataset::new(season, records, scaler.clone())
    })
}

/// The whole series as a single dataset, for runs without season splitting.
pub fn whole_dataset(series: &MultiSeries, scaler: &RobustScalerParams) -> SeasonalDataset {
    SeasonalDataset::new(SeasonId::All, series.records.clone(), scaler.clone())
}

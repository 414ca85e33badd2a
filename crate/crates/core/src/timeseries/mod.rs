//! Hourly series data model and the preparation stages that run before
//! anomaly detection: ingestion, calendar merging, gap filling, robust
//! scaling, season splitting, windowing and the train/test split.

mod calendar;
mod fill;
mod io;
mod scaler;
mod season;
mod window;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub use calendar::{is_weekend, merge_calendar};
pub use fill::{fill_missing, MAX_INTERPOLATED_GAP};
pub use io::{
    ingest_csv, ingest_many, read_dataset_csv, read_holidays, write_dataset_csv, write_holidays,
    write_series_csv, CsvSchema,
};
pub use scaler::{apply_scaler, fit_robust_scaler, invert_scaler, quantile, RobustScalerParams};
pub use season::{season_of, split_seasons, whole_dataset};
pub use window::{make_windows, split_train_test, TrainTestSplit, WindowedSample};

/// Number of model input features per hour: consumption, three weather
/// features and two calendar flags.
pub const FEATURE_COUNT: usize = 6;

/// Last year whose records are used for fitting and training.
pub const TRAIN_CUTOFF_YEAR: i32 = 2018;

/// Year whose targets form the test set.
pub const TEST_YEAR: i32 = 2019;

pub const HOURS_PER_WEEK: i64 = 168;

/// The continuous (scaled) features of a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Consumption,
    Temperature,
    RadiationDirect,
    RadiationDiffuse,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::Consumption,
        Feature::Temperature,
        Feature::RadiationDirect,
        Feature::RadiationDiffuse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Consumption => "consumption",
            Feature::Temperature => "temperature",
            Feature::RadiationDirect => "radiation_direct",
            Feature::RadiationDiffuse => "radiation_diffuse",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One hour of data. Continuous fields hold `NaN` while missing; after
/// [`fill_missing`] every field is finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyRecord {
    pub timestamp: NaiveDateTime,
    pub consumption: f64,
    pub temperature: f64,
    pub radiation_direct: f64,
    pub radiation_diffuse: f64,
    pub is_weekend_or_holiday: bool,
    pub is_holiday: bool,
}

impl HourlyRecord {
    pub fn new(timestamp: NaiveDateTime) -> Self {
        HourlyRecord {
            timestamp,
            consumption: f64::NAN,
            temperature: f64::NAN,
            radiation_direct: f64::NAN,
            radiation_diffuse: f64::NAN,
            is_weekend_or_holiday: false,
            is_holiday: false,
        }
    }

    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Consumption => self.consumption,
            Feature::Temperature => self.temperature,
            Feature::RadiationDirect => self.radiation_direct,
            Feature::RadiationDiffuse => self.radiation_diffuse,
        }
    }

    pub fn set(&mut self, feature: Feature, value: f64) {
        match feature {
            Feature::Consumption => self.consumption = value,
            Feature::Temperature => self.temperature = value,
            Feature::RadiationDirect => self.radiation_direct = value,
            Feature::RadiationDiffuse => self.radiation_diffuse = value,
        }
    }

    /// Model input row: the four continuous features followed by the two
    /// calendar flags as 0/1.
    pub fn features(&self) -> [f64; FEATURE_COUNT] {
        [
            self.consumption,
            self.temperature,
            self.radiation_direct,
            self.radiation_diffuse,
            flag(self.is_weekend_or_holiday),
            flag(self.is_holiday),
        ]
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date()
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// An ordered hourly series from one source.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiSeries {
    pub records: Vec<HourlyRecord>,
    pub origin: String,
    /// Holiday dates merged into the calendar flags; kept so that flags can
    /// be recomputed for hours inserted by gap filling.
    pub holidays: BTreeSet<NaiveDate>,
}

impl MultiSeries {
    pub fn new(origin: impl Into<String>, records: Vec<HourlyRecord>) -> Self {
        MultiSeries {
            records,
            origin: origin.into(),
            holidays: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every record is one hour after its predecessor.
    pub fn is_contiguous(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].timestamp - w[0].timestamp == Duration::hours(1))
    }
}

/// Seasonal window of a dataset. `All` imposes no date window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeasonId {
    S1,
    S2,
    S3,
    #[serde(rename = "ALL")]
    All,
}

impl SeasonId {
    pub const SPLIT: [SeasonId; 3] = [SeasonId::S1, SeasonId::S2, SeasonId::S3];
}

impl fmt::Display for SeasonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeasonId::S1 => "S1",
            SeasonId::S2 => "S2",
            SeasonId::S3 => "S3",
            SeasonId::All => "ALL",
        })
    }
}

impl FromStr for SeasonId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "S1" | "1" => Ok(SeasonId::S1),
            "S2" | "2" => Ok(SeasonId::S2),
            "S3" | "3" => Ok(SeasonId::S3),
            "ALL" => Ok(SeasonId::All),
            other => Err(format!("unknown season `{other}`")),
        }
    }
}

/// A season-filtered, scaled series together with its scaler and the
/// per-record anomaly annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonalDataset {
    pub season: SeasonId,
    pub records: Vec<HourlyRecord>,
    pub scaler: RobustScalerParams,
    pub anomaly_flags: Vec<bool>,
    pub substituted: Vec<bool>,
}

impl SeasonalDataset {
    pub fn new(season: SeasonId, records: Vec<HourlyRecord>, scaler: RobustScalerParams) -> Self {
        let n = records.len();
        SeasonalDataset {
            season,
            records,
            scaler,
            anomaly_flags: vec![false; n],
            substituted: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn consumption(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.consumption).collect()
    }

    /// Index ranges of maximal runs of consecutive hours.
    pub fn segments(&self) -> Vec<Range<usize>> {
        contiguous_segments(&self.records)
    }
}

pub(crate) fn contiguous_segments(records: &[HourlyRecord]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        let breaks = i == records.len()
            || records[i].timestamp - records[i - 1].timestamp != Duration::hours(1);
        if breaks {
            if start < i {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

//! Deterministic synthetic hourly load with daily, weekly and annual cycles,
//! heating demand driven by a synthetic temperature, solar radiation and a
//! fixed holiday calendar.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::timeseries::{merge_calendar, HourlyRecord, MultiSeries};

/// Month/day pairs treated as public holidays every year.
pub const FIXED_HOLIDAYS: [(u32, u32); 6] = [(1, 1), (5, 1), (10, 3), (12, 24), (12, 25), (12, 26)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub start_year: i32,
    pub end_year: i32,
    pub base_load: f64,
    pub daily_amp: f64,
    pub weekly_amp: f64,
    pub seasonal_amp: f64,
    /// Load increase per degree below `comfort_threshold`.
    pub temp_coupling: f64,
    pub comfort_threshold: f64,
    pub noise_std: f64,
    /// Factor applied to consumption on weekends and holidays.
    pub holiday_damping: f64,
    pub temp_mean: f64,
    pub temp_amp: f64,
    pub temp_noise_std: f64,
    /// Peak clear-sky direct and diffuse radiation in W/m² at midsummer.
    pub direct_peak: f64,
    pub diffuse_peak: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            start_year: 2015,
            end_year: 2019,
            base_load: 1000.0,
            daily_amp: 120.0,
            weekly_amp: 30.0,
            seasonal_amp: 80.0,
            temp_coupling: 6.0,
            comfort_threshold: 15.0,
            noise_std: 8.0,
            holiday_damping: 0.97,
            temp_mean: 10.0,
            temp_amp: 9.0,
            temp_noise_std: 0.4,
            direct_peak: 600.0,
            diffuse_peak: 150.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.end_year < self.start_year {
            return Err(format!("end_year {} precedes start_year {}", self.end_year, self.start_year));
        }
        let non_negative = [
            ("daily_amp", self.daily_amp),
            ("weekly_amp", self.weekly_amp),
            ("seasonal_amp", self.seasonal_amp),
            ("temp_coupling", self.temp_coupling),
            ("noise_std", self.noise_std),
            ("temp_amp", self.temp_amp),
            ("temp_noise_std", self.temp_noise_std),
            ("direct_peak", self.direct_peak),
            ("diffuse_peak", self.diffuse_peak),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if !(self.holiday_damping > 0.0 && self.holiday_damping <= 1.0) {
            return Err(format!("holiday_damping must lie in (0, 1], got {}", self.holiday_damping));
        }
        for (name, v) in [
            ("base_load", self.base_load),
            ("comfort_threshold", self.comfort_threshold),
            ("temp_mean", self.temp_mean),
        ] {
            if !v.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
        Ok(())
    }
}

pub fn holidays_for(start_year: i32, end_year: i32) -> BTreeSet<NaiveDate> {
    (start_year..=end_year)
        .flat_map(|y| FIXED_HOLIDAYS.iter().filter_map(move |&(m, d)| NaiveDate::from_ymd_opt(y, m, d)))
        .collect()
}

/// Daylight factor in [0, 1]: a clipped sinusoid that is positive between
/// 06:00 and 18:00 and exactly zero otherwise.
fn daylight(hour: u32) -> f64 {
    if !(7..=17).contains(&hour) {
        return 0.0;
    }
    (2.0 * PI * (hour as f64 - 6.0) / 24.0).sin().max(0.0)
}

/// Generates the series with calendar flags set from [`holidays_for`].
/// Panics if the spec is invalid; call [`SynthSpec::validate`] first.
pub fn generate(spec: &SynthSpec) -> MultiSeries {
    spec.validate().expect("invalid synthetic spec");
    let holidays = holidays_for(spec.start_year, spec.end_year);
    let start = NaiveDate::from_ymd_opt(spec.start_year, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let end = NaiveDate::from_ymd_opt(spec.end_year + 1, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let hours = (end - start).num_hours();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    // Temperature anomaly is AR(1) with stationary std `temp_noise_std`.
    let phi: f64 = 0.98;
    let innovation = spec.temp_noise_std * (1.0 - phi * phi).sqrt();
    let mut temp_anomaly = spec.temp_noise_std * unit.sample(&mut rng);

    // 2015-01-05 is a Monday; the weekly cycle is measured from there.
    let monday = NaiveDate::from_ymd_opt(2015, 1, 5).unwrap().and_hms_opt(0, 0, 0).unwrap();

    let mut records = Vec::with_capacity(hours as usize);
    for k in 0..hours {
        let ts = start + chrono::Duration::hours(k);
        let hour = ts.hour();
        let year_pos = (ts.ordinal0() as f64 * 24.0 + hour as f64) / 8760.0;
        let week_pos = (ts - monday).num_hours().rem_euclid(168) as f64 / 168.0;

        temp_anomaly = phi * temp_anomaly + innovation * unit.sample(&mut rng);
        // Coldest around mid January, warmest mid July.
        let temperature =
            spec.temp_mean - spec.temp_amp * (2.0 * PI * (year_pos - 0.04)).cos() + temp_anomaly;

        let mut consumption = spec.base_load
            + spec.daily_amp * (2.0 * PI * (hour as f64 - 18.0) / 24.0).cos()
            + spec.weekly_amp * (2.0 * PI * (week_pos - 0.3)).cos()
            + spec.seasonal_amp * (2.0 * PI * year_pos).cos()
            + spec.temp_coupling * (spec.comfort_threshold - temperature).max(0.0)
            + spec.noise_std * unit.sample(&mut rng);

        let mut record = HourlyRecord::new(ts);
        let date = ts.date();
        if holidays.contains(&date) || crate::timeseries::is_weekend(date) {
            consumption *= spec.holiday_damping;
        }
        let sun = daylight(hour);
        // Longer, stronger sun in summer.
        let summer = 0.6 - 0.4 * (2.0 * PI * year_pos).cos();
        record.consumption = consumption;
        record.temperature = temperature;
        record.radiation_direct = spec.direct_peak * summer * sun;
        record.radiation_diffuse = spec.diffuse_peak * (0.5 + 0.5 * summer) * sun;
        records.push(record);
    }
    merge_calendar(MultiSeries::new("synthetic", records), &holidays)
}

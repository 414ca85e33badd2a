use std::collections::{BTreeSet, HashMap};

use chrono::{Datelike, Duration, Timelike};
use serde::{Deserialize, Serialize};

use super::dbscan::{dbscan, ClusterLabeling, DbscanParams};
use crate::error::AnomalyError;
use crate::timeseries::{quantile, SeasonalDataset, HOURS_PER_WEEK};

/// Flags every record outside the main cluster unless it falls on a holiday.
/// With no cluster at all, every non-holiday record is flagged.
pub fn flag_anomalies(
    mut dataset: SeasonalDataset,
    labeling: &ClusterLabeling,
) -> Result<SeasonalDataset, AnomalyError> {
    if labeling.labels.len() != dataset.len() {
        return Err(AnomalyError::LengthMismatch {
            labels: labeling.labels.len(),
            records: dataset.len(),
        });
    }
    dataset.anomaly_flags = dataset
        .records
        .iter()
        .zip(&labeling.labels)
        .map(|(r, &label)| Some(label) != labeling.main_cluster && !r.is_holiday)
        .collect();
    Ok(dataset)
}

/// Replaces each flagged consumption value by the value at the same hour one
/// week earlier, stepping back further while the candidate is missing,
/// flagged or a holiday. When the search runs past the start of the dataset,
/// the median of clean training records at the same hour of day is used.
/// Substituted records are unflagged and marked in `substituted`.
pub fn substitute(mut dataset: SeasonalDataset) -> Result<SeasonalDataset, AnomalyError> {
    let Some(first) = dataset.records.first().map(|r| r.timestamp) else {
        return Ok(dataset);
    };
    let flagged = dataset.anomaly_flags.clone();
    let index: HashMap<_, _> = dataset
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.timestamp, i))
        .collect();
    let clean = |j: usize| !flagged[j] && !dataset.records[j].is_holiday;
    let cutoff = dataset.scaler.train_cutoff_year;
    let mut hour_medians: HashMap<u32, Option<f64>> = HashMap::new();

    let mut replacements = Vec::new();
    for i in (0..dataset.len()).filter(|&i| flagged[i]) {
        let at = dataset.records[i].timestamp;
        let mut t = at - Duration::hours(HOURS_PER_WEEK);
        let mut source = None;
        while t >= first {
            if let Some(&j) = index.get(&t) {
                if clean(j) {
                    source = Some(j);
                    break;
                }
            }
            t -= Duration::hours(HOURS_PER_WEEK);
        }
        let value = match source {
            Some(j) => dataset.records[j].consumption,
            None => {
                let hour = at.hour();
                let median = *hour_medians.entry(hour).or_insert_with(|| {
                    let mut values: Vec<f64> = dataset
                        .records
                        .iter()
                        .enumerate()
                        .filter(|&(j, r)| {
                            clean(j) && r.timestamp.hour() == hour && r.timestamp.year() <= cutoff
                        })
                        .map(|(_, r)| r.consumption)
                        .collect();
                    if values.is_empty() {
                        return None;
                    }
                    values.sort_by(f64::total_cmp);
                    Some(quantile(&values, 0.5))
                });
                median.ok_or(AnomalyError::Unresolvable { hour, at })?
            }
        };
        replacements.push((i, value));
    }

    for (i, value) in replacements {
        dataset.records[i].consumption = value;
        dataset.anomaly_flags[i] = false;
        dataset.substituted[i] = true;
    }
    Ok(dataset)
}

/// Detection quality against injected ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// `None` when nothing was flagged.
    pub precision: Option<f64>,
    /// `None` when the ground truth is empty.
    pub recall: Option<f64>,
}

impl DetectionScore {
    pub fn new(flagged: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Self {
        let tp = flagged.intersection(truth).count();
        Self::from_counts(tp, flagged.len() - tp, truth.len() - tp)
    }

    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        DetectionScore {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
        }
    }

    /// Pools counts, for scores over several datasets.
    pub fn merge(&self, other: &DetectionScore) -> DetectionScore {
        Self::from_counts(
            self.true_positives + other.true_positives,
            self.false_positives + other.false_positives,
            self.false_negatives + other.false_negatives,
        )
    }
}

/// Outcome of running detection and substitution on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub season: crate::timeseries::SeasonId,
    pub params: DbscanParams,
    pub clusters: usize,
    pub noise_points: usize,
    pub main_cluster: Option<i32>,
    pub flagged: Vec<usize>,
    pub holiday_exempt: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<DetectionScore>,
}

/// DBSCAN on scaled consumption, flagging, then substitution.
pub fn detect_and_substitute(
    dataset: SeasonalDataset,
    params: &DbscanParams,
    truth: Option<&BTreeSet<usize>>,
) -> Result<(SeasonalDataset, DetectionSummary), AnomalyError> {
    let labeling = dbscan(&dataset.consumption(), params)?;
    let flagged_ds = flag_anomalies(dataset, &labeling)?;
    let flagged: BTreeSet<usize> = flagged_ds
        .anomaly_flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect();
    let holiday_exempt = flagged_ds
        .records
        .iter()
        .zip(&labeling.labels)
        .filter(|(r, &l)| r.is_holiday && Some(l) != labeling.main_cluster)
        .count();
    let summary = DetectionSummary {
        season: flagged_ds.season,
        params: *params,
        clusters: labeling.cluster_count(),
        noise_points: labeling.noise_count(),
        main_cluster: labeling.main_cluster,
        score: truth.map(|t| DetectionScore::new(&flagged, t)),
        flagged: flagged.into_iter().collect(),
        holiday_exempt,
    };
    Ok((substitute(flagged_ds)?, summary))
}

//! Underestimation/overestimation RMSE, error histograms and comparison of
//! experiment groups.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::losses::LossKind;
use crate::timeseries::SeasonId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyMode {
    Off,
    DetectSubstitute,
}

impl fmt::Display for AnomalyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnomalyMode::Off => "off",
            AnomalyMode::DetectSubstitute => "detect_substitute",
        })
    }
}

impl FromStr for AnomalyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(AnomalyMode::Off),
            "detect_substitute" | "detect-substitute" => Ok(AnomalyMode::DetectSubstitute),
            other => Err(format!("unknown anomaly mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalityMode {
    Split,
    Whole,
}

impl fmt::Display for SeasonalityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeasonalityMode::Split => "split",
            SeasonalityMode::Whole => "whole",
        })
    }
}

impl FromStr for SeasonalityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "split" => Ok(SeasonalityMode::Split),
            "whole" => Ok(SeasonalityMode::Whole),
            other => Err(format!("unknown seasonality mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Scaled,
    Raw,
}

/// Errors split by sign. `e = prediction - target`; negative errors are
/// underestimates. Each RMSE is taken over its own subset and is `None`
/// when the subset is empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSplit {
    pub under_rmse: Option<f64>,
    pub over_rmse: Option<f64>,
    pub n_under: usize,
    pub n_over: usize,
    pub n_exact: usize,
}

pub fn errors(predictions: &[f64], targets: &[f64]) -> Result<Vec<f64>, EvalError> {
    if predictions.len() != targets.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            targets: targets.len(),
        });
    }
    Ok(predictions.iter().zip(targets).map(|(p, t)| p - t).collect())
}

pub fn split_rmse(predictions: &[f64], targets: &[f64]) -> Result<ErrorSplit, EvalError> {
    let errors = errors(predictions, targets)?;
    split_errors(&errors)
}

pub fn split_errors(errors: &[f64]) -> Result<ErrorSplit, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut under_sq, mut over_sq) = (0.0, 0.0);
    let (mut n_under, mut n_over, mut n_exact) = (0, 0, 0);
    for &e in errors {
        if e < 0.0 {
            under_sq += e * e;
            n_under += 1;
        } else if e > 0.0 {
            over_sq += e * e;
            n_over += 1;
        } else {
            n_exact += 1;
        }
    }
    let rmse = |sum: f64, n: usize| (n > 0).then(|| (sum / n as f64).sqrt());
    Ok(ErrorSplit {
        under_rmse: rmse(under_sq, n_under),
        over_rmse: rmse(over_sq, n_over),
        n_under,
        n_over,
        n_exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Uniform bins `[k w, (k + 1) w)` aligned so that 0 is a bin edge. Covers
/// every bin from the lowest to the highest error, empty ones included.
pub fn error_histogram(errors: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, EvalError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(EvalError::BinWidth(bin_width));
    }
    let bin_of = |e: f64| -> i64 {
        let mut k = (e / bin_width).floor() as i64;
        // Keep membership consistent with the reported edges.
        if e < k as f64 * bin_width {
            k -= 1;
        } else if e >= (k + 1) as f64 * bin_width {
            k += 1;
        }
        k
    };
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &e in errors.iter().filter(|e| e.is_finite()) {
        *counts.entry(bin_of(e)).or_default() += 1;
    }
    let (Some(&lo), Some(&hi)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Ok(Vec::new());
    };
    Ok((lo..=hi)
        .map(|k| HistogramBin {
            lower: k as f64 * bin_width,
            upper: (k + 1) as f64 * bin_width,
            count: counts.get(&k).copied().unwrap_or(0),
        })
        .collect())
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_lower,bin_upper,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", b.lower, b.upper, b.count);
    }
    out
}

/// Identifies the experiment a report came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub loss: LossKind,
    pub season: SeasonId,
    pub anomaly: AnomalyMode,
    pub seasonality: SeasonalityMode,
    pub injection_rate: Option<f64>,
    pub model_seed: u64,
    pub shuffle_seed: u64,
    pub injection_seed: Option<u64>,
    pub units: Units,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub under_rmse: Option<f64>,
    pub over_rmse: Option<f64>,
    pub n_under: usize,
    pub n_over: usize,
    pub n_exact: usize,
    pub histogram: Vec<HistogramBin>,
    pub metadata: ReportMeta,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.n_under + self.n_over + self.n_exact
    }
}

/// Scores predictions against targets. `unit_scale` multiplies the errors
/// first (1 for scaled units, the consumption IQR for raw units).
pub fn evaluate(
    predictions: &[f64],
    targets: &[f64],
    unit_scale: f64,
    bin_width: f64,
    metadata: ReportMeta,
) -> Result<EvalReport, EvalError> {
    let errors: Vec<f64> = errors(predictions, targets)?
        .into_iter()
        .map(|e| e * unit_scale)
        .collect();
    let split = split_errors(&errors)?;
    Ok(EvalReport {
        under_rmse: split.under_rmse,
        over_rmse: split.over_rmse,
        n_under: split.n_under,
        n_over: split.n_over,
        n_exact: split.n_exact,
        histogram: error_histogram(&errors, bin_width)?,
        metadata,
    })
}

/// Relative decrease `(old - new) / old` in percent.
pub fn percent_decrease(old: f64, new: f64) -> Option<f64> {
    (old != 0.0).then(|| (old - new) / old * 100.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub loss: LossKind,
    pub anomaly: AnomalyMode,
    pub seasonality: SeasonalityMode,
    /// Injection rate in basis points.
    pub injection_bp: Option<u32>,
}

impl GroupKey {
    pub fn of(meta: &ReportMeta) -> Self {
        GroupKey {
            loss: meta.loss,
            anomaly: meta.anomaly,
            seasonality: meta.seasonality,
            injection_bp: meta.injection_rate.map(|r| (r * 10_000.0).round() as u32),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.loss, self.anomaly, self.seasonality)?;
        match self.injection_bp {
            Some(bp) => write!(f, "/inject {}%", bp as f64 / 100.0),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub key: GroupKey,
    pub seasons: Vec<SeasonId>,
    /// Arithmetic mean of the per-season RMSEs that are present.
    pub under_rmse: Option<f64>,
    pub over_rmse: Option<f64>,
}

/// Which groups are paired for a percentage delta. The first named side is
/// the baseline (`old`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Injected outliers kept versus detected and substituted.
    Anomaly,
    /// Whole series versus season split.
    Seasonality,
    /// Symmetric loss versus each asymmetric loss.
    LossVsMse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub pairing: Pairing,
    pub old: GroupKey,
    pub new: GroupKey,
    pub under_decrease_pct: Option<f64>,
    pub over_decrease_pct: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<GroupRow>,
    pub deltas: Vec<Delta>,
    pub notices: Vec<String>,
}

fn mean_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Groups reports by loss, anomaly treatment, seasonality mode and injection
/// rate, averages RMSEs across seasons, and computes the requested deltas.
pub fn compare_experiments(reports: &[EvalReport], pairings: &[Pairing]) -> ComparisonTable {
    let mut groups: BTreeMap<GroupKey, Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(GroupKey::of(&r.metadata)).or_default().push(r);
    }
    let rows: Vec<GroupRow> = groups
        .iter()
        .map(|(key, rs)| GroupRow {
            key: *key,
            seasons: rs.iter().map(|r| r.metadata.season).collect(),
            under_rmse: mean_present(rs.iter().map(|r| r.under_rmse)),
            over_rmse: mean_present(rs.iter().map(|r| r.over_rmse)),
        })
        .collect();
    let by_key: BTreeMap<GroupKey, &GroupRow> = rows.iter().map(|r| (r.key, r)).collect();

    let mut deltas = Vec::new();
    let mut notices = Vec::new();
    for &pairing in pairings {
        for row in &rows {
            let partners: Vec<GroupKey> = match pairing {
                Pairing::Anomaly if row.key.anomaly == AnomalyMode::Off => vec![GroupKey {
                    anomaly: AnomalyMode::DetectSubstitute,
                    ..row.key
                }],
                Pairing::Seasonality if row.key.seasonality == SeasonalityMode::Whole => {
                    vec![GroupKey {
                        seasonality: SeasonalityMode::Split,
                        ..row.key
                    }]
                }
                Pairing::LossVsMse if row.key.loss == LossKind::Mse => [LossKind::Al1, LossKind::Al2]
                    .map(|loss| GroupKey { loss, ..row.key })
                    .to_vec(),
                _ => continue,
            };
            for new_key in partners {
                let Some(new) = by_key.get(&new_key) else {
                    notices.push(format!("no {new_key} group to pair with {}; delta omitted", row.key));
                    continue;
                };
                let pct = |old: Option<f64>, new: Option<f64>| match (old, new) {
                    (Some(o), Some(n)) => percent_decrease(o, n),
                    _ => None,
                };
                deltas.push(Delta {
                    pairing,
                    old: row.key,
                    new: new_key,
                    under_decrease_pct: pct(row.under_rmse, new.under_rmse),
                    over_decrease_pct: pct(row.over_rmse, new.over_rmse),
                });
            }
        }
    }
    ComparisonTable {
        rows,
        deltas,
        notices,
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

impl ComparisonTable {
    /// Fixed-width text rendering for terminals and summary files.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<48} {:>12} {:>12}  seasons", "group", "under_rmse", "over_rmse");
        for row in &self.rows {
            let seasons: Vec<String> = row.seasons.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "{:<48} {:>12} {:>12}  {}",
                row.key.to_string(),
                fmt_opt(row.under_rmse, 4),
                fmt_opt(row.over_rmse, 4),
                seasons.join(",")
            );
        }
        if !self.deltas.is_empty() {
            let _ = writeln!(out, "\n{:<48} {:<48} {:>9} {:>9}", "baseline", "compared", "under %", "over %");
            for d in &self.deltas {
                let _ = writeln!(
                    out,
                    "{:<48} {:<48} {:>9} {:>9}",
                    d.old.to_string(),
                    d.new.to_string(),
                    fmt_opt(d.under_decrease_pct, 1),
                    fmt_opt(d.over_decrease_pct, 1)
                );
            }
        }
        for n in &self.notices {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

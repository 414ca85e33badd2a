use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{HourlyRecord, MultiSeries, RobustScalerParams, SeasonId, SeasonalDataset};
use crate::error::DataError;

/// Column names for the input CSV. Defaults match the standard header
/// `timestamp,consumption,temperature,radiation_direct,radiation_diffuse`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub timestamp: String,
    pub consumption: String,
    pub temperature: String,
    pub radiation_direct: String,
    pub radiation_diffuse: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            timestamp: "timestamp".into(),
            consumption: "consumption".into(),
            temperature: "temperature".into(),
            radiation_direct: "radiation_direct".into(),
            radiation_diffuse: "radiation_diffuse".into(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> DataError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    DataError::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC; naive
/// timestamps are taken as UTC.
pub(crate) fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub(crate) fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

fn parse_value(field: &str) -> Result<f64, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(f64::NAN);
    }
    field
        .parse::<f64>()
        .map_err(|_| format!("invalid number `{field}`"))
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn column(
    headers: &csv::StringRecord,
    name: &str,
    path: &Path,
) -> Result<usize, DataError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| DataError::Header {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

fn reject_duplicates(records: &[HourlyRecord]) -> Result<(), DataError> {
    match records.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        Some(w) => Err(DataError::DuplicateTimestamp(w[0].timestamp)),
        None => Ok(()),
    }
}

/// Reads an hourly CSV into a series sorted by timestamp. Empty fields are
/// missing values. Calendar flags are left unset until [`super::merge_calendar`].
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<MultiSeries, DataError> {
    let mut records = read_records(path, schema)?;
    records.sort_by_key(|r| r.timestamp);
    reject_duplicates(&records)?;
    let origin = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(MultiSeries::new(origin, records))
}

/// Ingests several files (for example one per year) into one series.
pub fn ingest_many<P: AsRef<Path>>(paths: &[P], schema: &CsvSchema) -> Result<MultiSeries, DataError> {
    let mut records = Vec::new();
    for p in paths {
        records.extend(read_records(p.as_ref(), schema)?);
    }
    records.sort_by_key(|r| r.timestamp);
    reject_duplicates(&records)?;
    let origin = paths
        .first()
        .and_then(|p| p.as_ref().file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(MultiSeries::new(origin, records))
}

fn read_records(path: &Path, schema: &CsvSchema) -> Result<Vec<HourlyRecord>, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols = [
        column(&headers, &schema.timestamp, path)?,
        column(&headers, &schema.consumption, path)?,
        column(&headers, &schema.temperature, path)?,
        column(&headers, &schema.radiation_direct, path)?,
        column(&headers, &schema.radiation_diffuse, path)?,
    ];
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| DataError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let get = |i: usize| row.get(cols[i]).unwrap_or("");
        let ts = parse_timestamp(get(0))
            .ok_or_else(|| parse_err(format!("invalid timestamp `{}`", get(0))))?;
        let mut record = HourlyRecord::new(ts);
        record.consumption = parse_value(get(1)).map_err(parse_err)?;
        record.temperature = parse_value(get(2)).map_err(parse_err)?;
        record.radiation_direct = parse_value(get(3)).map_err(parse_err)?;
        record.radiation_diffuse = parse_value(get(4)).map_err(parse_err)?;
        records.push(record);
    }
    Ok(records)
}

/// Writes a series in the standard input schema.
pub fn write_series_csv(path: &Path, series: &MultiSeries) -> Result<(), DataError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let werr = io_err(path);
    let result = (|| {
        writeln!(w, "timestamp,consumption,temperature,radiation_direct,radiation_diffuse")?;
        for r in &series.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                format_timestamp(r.timestamp),
                format_value(r.consumption),
                format_value(r.temperature),
                format_value(r.radiation_direct),
                format_value(r.radiation_diffuse),
            )?;
        }
        w.flush()
    })();
    result.map_err(werr)
}

const DATASET_HEADER: &str = "timestamp,consumption,temperature,radiation_direct,radiation_diffuse,season_id,is_weekend_or_holiday,is_holiday,anomaly_flag";

/// Writes a seasonal dataset: the input schema plus season, calendar and
/// anomaly columns.
pub fn write_dataset_csv(path: &Path, dataset: &SeasonalDataset) -> Result<(), DataError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let werr = io_err(path);
    let result = (|| {
        writeln!(w, "{DATASET_HEADER}")?;
        for (r, &flagged) in dataset.records.iter().zip(&dataset.anomaly_flags) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                format_timestamp(r.timestamp),
                format_value(r.consumption),
                format_value(r.temperature),
                format_value(r.radiation_direct),
                format_value(r.radiation_diffuse),
                dataset.season,
                u8::from(r.is_weekend_or_holiday),
                u8::from(r.is_holiday),
                u8::from(flagged),
            )?;
        }
        w.flush()
    })();
    result.map_err(werr)
}

/// Reads a file written by [`write_dataset_csv`]. The scaler is not part of
/// the CSV and must be supplied.
pub fn read_dataset_csv(
    path: &Path,
    scaler: RobustScalerParams,
) -> Result<SeasonalDataset, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let names: Vec<&str> = DATASET_HEADER.split(',').collect();
    let cols = names
        .iter()
        .map(|n| column(&headers, n, path))
        .collect::<Result<Vec<_>, _>>()?;

    let mut season = SeasonId::All;
    let mut records = Vec::new();
    let mut flags = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| DataError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let get = |i: usize| row.get(cols[i]).unwrap_or("");
        let bit = |i: usize| match get(i) {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(format!("invalid flag `{other}` in {}", names[i]))),
        };
        let ts = parse_timestamp(get(0))
            .ok_or_else(|| parse_err(format!("invalid timestamp `{}`", get(0))))?;
        let mut r = HourlyRecord::new(ts);
        r.consumption = parse_value(get(1)).map_err(parse_err)?;
        r.temperature = parse_value(get(2)).map_err(parse_err)?;
        r.radiation_direct = parse_value(get(3)).map_err(parse_err)?;
        r.radiation_diffuse = parse_value(get(4)).map_err(parse_err)?;
        season = get(5).parse().map_err(parse_err)?;
        r.is_weekend_or_holiday = bit(6)?;
        r.is_holiday = bit(7)?;
        flags.push(bit(8)?);
        records.push(r);
    }
    let mut ds = SeasonalDataset::new(season, records, scaler);
    ds.anomaly_flags = flags;
    Ok(ds)
}

/// Reads one ISO-8601 date per line; `#` starts a comment.
pub fn read_holidays(path: &Path) -> Result<BTreeSet<NaiveDate>, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = BTreeSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| DataError::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: format!("invalid date `{text}`"),
        })?;
        out.insert(date);
    }
    Ok(out)
}

pub fn write_holidays(path: &Path, holidays: &BTreeSet<NaiveDate>) -> Result<(), DataError> {
    let mut text = String::from("# holiday dates, one per line\n");
    for d in holidays {
        text.push_str(&d.format("%Y-%m-%d").to_string());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

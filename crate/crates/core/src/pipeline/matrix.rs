use std::fs;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{run_pipeline, PipelineOutcome};
use crate::anomaly::InjectionSpec;
use crate::error::PipelineError;
use crate::evaluation::{compare_experiments, AnomalyMode, ComparisonTable, Pairing, SeasonalityMode};
use crate::losses::LossKind;

/// Values to sweep. An empty axis keeps the base config's value. Injection
/// rates of `None` mean no injection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatrixAxes {
    pub losses: Vec<LossKind>,
    pub anomaly: Vec<AnomalyMode>,
    pub seasonality: Vec<SeasonalityMode>,
    pub injection_rates: Vec<Option<f64>>,
}

#[derive(Debug)]
pub struct CellOutcome {
    pub label: String,
    pub config: ExperimentConfig,
    pub result: Result<PipelineOutcome, PipelineError>,
}

#[derive(Debug)]
pub struct MatrixOutcome {
    pub cells: Vec<CellOutcome>,
    pub table: ComparisonTable,
    /// Labels and causes of cells that failed.
    pub failures: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Summary<'a> {
    cells: Vec<&'a str>,
    failures: &'a [(String, String)],
    table: &'a ComparisonTable,
}

fn or_base<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Cartesian product of the axes over `base`, in axis order. Each cell
/// writes under `<output_dir>/cells/<label>`.
pub fn expand_cells(base: &ExperimentConfig, axes: &MatrixAxes) -> Vec<ExperimentConfig> {
    let losses = or_base(&axes.losses, base.train.loss.kind);
    let anomaly = or_base(&axes.anomaly, base.anomaly);
    let seasonality = or_base(&axes.seasonality, base.seasonality);
    let rates = or_base(&axes.injection_rates, base.injection.map(|i| i.rate));
    let mut cells = Vec::new();
    for &loss in &losses {
        for &rate in &rates {
            for &anom in &anomaly {
                for &season in &seasonality {
                    let mut c = base.clone();
                    c.train.loss.kind = loss;
                    c.anomaly = anom;
                    c.seasonality = season;
                    c.injection = rate.map(|rate| InjectionSpec {
                        rate,
                        ..base.injection.unwrap_or_default()
                    });
                    c.output_dir = base.output_dir.join("cells").join(c.label());
                    cells.push(c);
                }
            }
        }
    }
    cells
}

/// Runs every cell, at most `workers` at a time, then compares all reports.
/// A failing cell is recorded and does not stop the others. The summary is
/// written to `summary.txt` and `summary.json` in the base output directory.
pub fn run_matrix(base: &ExperimentConfig, axes: &MatrixAxes, workers: usize) -> Result<MatrixOutcome, PipelineError> {
    base.validate()?;
    let configs = expand_cells(base, axes);
    for c in &configs {
        c.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::stage("matrix", e))?;
    let results: Vec<Result<PipelineOutcome, PipelineError>> =
        pool.install(|| configs.par_iter().map(run_pipeline).collect());

    let cells: Vec<CellOutcome> = configs
        .into_iter()
        .zip(results)
        .map(|(config, result)| CellOutcome {
            label: config.label(),
            config,
            result,
        })
        .collect();
    let failures: Vec<(String, String)> = cells
        .iter()
        .filter_map(|c| c.result.as_ref().err().map(|e| (c.label.clone(), e.to_string())))
        .collect();
    let reports: Vec<_> = cells
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .flat_map(|o| o.reports.iter().cloned())
        .collect();
    let table = compare_experiments(&reports, &[Pairing::Anomaly, Pairing::Seasonality, Pairing::LossVsMse]);

    fs::create_dir_all(&base.output_dir).map_err(|e| PipelineError::stage("matrix", e))?;
    let mut text = table.to_text();
    for (label, cause) in &failures {
        text.push_str(&format!("failed: {label}: {cause}\n"));
    }
    fs::write(base.output_dir.join("summary.txt"), &text).map_err(|e| PipelineError::stage("matrix", e))?;
    let summary = Summary {
        cells: cells.iter().map(|c| c.label.as_str()).collect(),
        failures: &failures,
        table: &table,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    fs::write(base.output_dir.join("summary.json"), json).map_err(|e| PipelineError::stage("matrix", e))?;
    Ok(MatrixOutcome { cells, table, failures })
}

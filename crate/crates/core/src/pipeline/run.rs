use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{derive_seeds, ExperimentConfig, SeasonSeeds};
use super::manifest::{clear_run_entries, quarantine, Artifacts, Manifest, MANIFEST_FILE};
use crate::anomaly::{detect_and_substitute, inject_outliers, DetectionSummary, InjectionSpec};
use crate::error::PipelineError;
use crate::evaluation::{compare_experiments, AnomalyMode, evaluate, histogram_csv, EvalReport, GroupRow, ReportMeta, Units};
use crate::lstm::{save_checkpoint, train, LstmModel, TrainConfig, TrainOutcome};
use crate::synth::generate;
use crate::timeseries::{
    apply_scaler, fill_missing, fit_robust_scaler, ingest_many, make_windows, merge_calendar,
    read_holidays, split_seasons, split_train_test, whole_dataset, write_dataset_csv,
    write_holidays, write_series_csv, CsvSchema, MultiSeries, RobustScalerParams, SeasonalDataset,
    TrainTestSplit,
};

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub output_dir: PathBuf,
    /// One report per trained model, in season order.
    pub reports: Vec<EvalReport>,
    /// Season average, present in split mode.
    pub average: Option<GroupRow>,
    pub detection: Vec<DetectionSummary>,
    pub loss_traces: Vec<Vec<f64>>,
    pub manifest: Manifest,
}

/// Report file contents: the report plus the experiment that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(flatten)]
    pub report: EvalReport,
    pub config: serde_json::Value,
}

/// Loads the configured source and merges the holiday calendar. Synthetic
/// sources bring their own holidays; a holiday file adds to them.
pub fn load_series(config: &ExperimentConfig) -> Result<MultiSeries, PipelineError> {
    let series = match (&config.csv, &config.synth) {
        (Some(paths), _) => ingest_many(paths, &CsvSchema::default()).map_err(|e| PipelineError::stage("ingest", e))?,
        (None, Some(spec)) => generate(spec),
        (None, None) => return Err(PipelineError::Validation("no data source".into())),
    };
    let mut holidays: BTreeSet<_> = series.holidays.clone();
    if let Some(path) = &config.holidays {
        holidays.extend(read_holidays(path).map_err(|e| PipelineError::stage("ingest", e))?);
    }
    Ok(merge_calendar(series, &holidays))
}

/// Season datasets according to the seasonality mode.
pub fn season_datasets(config: &ExperimentConfig, scaled: &MultiSeries, scaler: &RobustScalerParams) -> Vec<SeasonalDataset> {
    match config.seasonality {
        crate::evaluation::SeasonalityMode::Split => split_seasons(scaled, scaler).into_iter().collect(),
        crate::evaluation::SeasonalityMode::Whole => vec![whole_dataset(scaled, scaler)],
    }
}

/// Injects outliers with the season's derived seed.
pub fn inject_dataset(
    dataset: SeasonalDataset,
    spec: &InjectionSpec,
    seeds: &SeasonSeeds,
) -> Result<(SeasonalDataset, BTreeSet<usize>), PipelineError> {
    let spec = InjectionSpec { seed: seeds.injection, ..*spec };
    inject_outliers(dataset, &spec).map_err(|e| PipelineError::stage("inject", e))
}

pub fn clean_dataset(
    config: &ExperimentConfig,
    dataset: SeasonalDataset,
    truth: Option<&BTreeSet<usize>>,
) -> Result<(SeasonalDataset, DetectionSummary), PipelineError> {
    detect_and_substitute(dataset, &config.dbscan, truth).map_err(|e| PipelineError::stage("detect", e))
}

/// A dataset ready for windowing, with the seeds and detection results
/// that produced it.
#[derive(Clone, Debug)]
pub struct PreparedDataset {
    pub dataset: SeasonalDataset,
    pub seeds: SeasonSeeds,
    pub truth: Option<BTreeSet<usize>>,
    pub detection: Option<DetectionSummary>,
}

/// Every stage up to windowing, in memory and without writing artifacts.
pub fn prepare_datasets(config: &ExperimentConfig) -> Result<Vec<PreparedDataset>, PipelineError> {
    config.validate()?;
    let series = fill_missing(load_series(config)?).map_err(|e| PipelineError::stage("fill", e))?;
    let scaler = fit_robust_scaler(&series, config.train_cutoff_year).map_err(|e| PipelineError::stage("scale", e))?;
    let scaled = apply_scaler(series, &scaler);
    season_datasets(config, &scaled, &scaler)
        .into_iter()
        .map(|dataset| {
            let seeds = derive_seeds(config.seed, dataset.season);
            let (dataset, truth) = match &config.injection {
                Some(spec) => {
                    let (d, t) = inject_dataset(dataset, spec, &seeds)?;
                    (d, Some(t))
                }
                None => (dataset, None),
            };
            let (dataset, detection) = match config.anomaly {
                AnomalyMode::DetectSubstitute => {
                    let (d, summary) = clean_dataset(config, dataset, truth.as_ref())?;
                    (d, Some(summary))
                }
                AnomalyMode::Off => (dataset, None),
            };
            Ok(PreparedDataset { dataset, seeds, truth, detection })
        })
        .collect()
}

/// Training config for one season with the derived shuffle seed.
pub fn season_train_config(config: &ExperimentConfig, seeds: &SeasonSeeds) -> TrainConfig {
    TrainConfig {
        shuffle_seed: seeds.shuffle,
        ..config.train
    }
}

/// Builds and trains the model for one prepared dataset.
pub fn fit_dataset(
    config: &ExperimentConfig,
    seeds: &SeasonSeeds,
    split: &TrainTestSplit,
) -> Result<TrainOutcome, PipelineError> {
    let model_config = crate::lstm::ModelConfig {
        seed: seeds.model,
        ..config.model
    };
    let model = LstmModel::new(model_config).map_err(|e| PipelineError::stage("train", e))?;
    train(model, &split.train, &season_train_config(config, seeds)).map_err(|e| PipelineError::stage("train", e))
}

/// Metadata stored with every checkpoint; evaluation reads the scaler from
/// here when reporting raw units.
pub fn checkpoint_meta(config: &ExperimentConfig, dataset: &SeasonalDataset, seeds: &SeasonSeeds) -> serde_json::Value {
    serde_json::json!({
        "season": dataset.season,
        "loss": config.train.loss,
        "seeds": seeds,
        "window": config.window,
        "test_year": config.test_year,
        "scaler": dataset.scaler,
        "report": report_meta(config, dataset.season, seeds),
    })
}

pub fn report_meta(config: &ExperimentConfig, season: crate::timeseries::SeasonId, seeds: &SeasonSeeds) -> ReportMeta {
    ReportMeta {
        loss: config.train.loss.kind,
        season,
        anomaly: config.anomaly,
        seasonality: config.seasonality,
        injection_rate: config.injection.map(|i| i.rate),
        model_seed: seeds.model,
        shuffle_seed: seeds.shuffle,
        injection_seed: config.injection.map(|_| seeds.injection),
        units: if config.raw_units { Units::Raw } else { Units::Scaled },
    }
}

fn io_stage(stage: &'static str) -> impl Fn(std::io::Error) -> PipelineError {
    move |e| PipelineError::stage(stage, e)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn samples_digest(split: &TrainTestSplit) -> Vec<u8> {
    let mut h = Sha256::new();
    for s in split.train.iter().chain(&split.test) {
        h.update(s.target.to_bits().to_le_bytes());
        for v in &s.inputs {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.update((split.train.len() as u64).to_le_bytes());
    h.finalize().to_vec()
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    artifacts: Artifacts,
    /// Stage currently executing, reported on failure.
    stage: &'static str,
}

impl Run<'_> {
    fn enter(&mut self, stage: &'static str) {
        log::info!("stage {stage}");
        self.stage = stage;
    }

    fn execute(&mut self) -> Result<PipelineOutcome, PipelineError> {
        let config = self.config;

        self.enter("ingest");
        let series = load_series(config)?;
        let path = self.artifacts.prepare("datasets/ingested.csv").map_err(io_stage("ingest"))?;
        write_series_csv(&path, &series).map_err(|e| PipelineError::stage("ingest", e))?;
        self.artifacts.record("datasets/ingested.csv").map_err(io_stage("ingest"))?;
        let path = self.artifacts.prepare("datasets/holidays.txt").map_err(io_stage("ingest"))?;
        write_holidays(&path, &series.holidays).map_err(|e| PipelineError::stage("ingest", e))?;
        self.artifacts.record("datasets/holidays.txt").map_err(io_stage("ingest"))?;
        self.artifacts.finish_stage("ingest", None, b"");

        self.enter("fill");
        let series = fill_missing(series).map_err(|e| PipelineError::stage("fill", e))?;
        write_series_csv(&self.artifacts.path("datasets/filled.csv"), &series)
            .map_err(|e| PipelineError::stage("fill", e))?;
        self.artifacts.record("datasets/filled.csv").map_err(io_stage("fill"))?;
        self.artifacts.finish_stage("fill", None, b"");

        self.enter("scale");
        let scaler = fit_robust_scaler(&series, config.train_cutoff_year).map_err(|e| PipelineError::stage("scale", e))?;
        let scaled = apply_scaler(series, &scaler);
        self.artifacts
            .write("datasets/scaler.json", &json_bytes(&scaler))
            .map_err(io_stage("scale"))?;
        self.artifacts.finish_stage("scale", None, b"");

        self.enter("split");
        let mut datasets = season_datasets(config, &scaled, &scaler);
        drop(scaled);
        for ds in &datasets {
            let rel = format!("datasets/{}_scaled.csv", ds.season);
            write_dataset_csv(&self.artifacts.path(&rel), ds).map_err(|e| PipelineError::stage("split", e))?;
            self.artifacts.record(&rel).map_err(io_stage("split"))?;
        }
        self.artifacts.finish_stage("split", None, b"");

        let seeds: Vec<SeasonSeeds> = datasets.iter().map(|d| derive_seeds(config.seed, d.season)).collect();
        for (ds, s) in datasets.iter().zip(&seeds) {
            self.artifacts.manifest.seeds.insert(ds.season.to_string(), *s);
        }

        let mut truths: Vec<Option<BTreeSet<usize>>> = vec![None; datasets.len()];
        if let Some(spec) = &config.injection {
            self.enter("inject");
            let mut injected_sets = Vec::new();
            for (k, (ds, s)) in datasets.into_iter().zip(&seeds).enumerate() {
                let (injected, truth) = inject_dataset(ds, spec, s)?;
                let season = injected.season;
                let rel = format!("datasets/{season}_injected.csv");
                self.artifacts.prepare(&rel).map_err(io_stage("inject"))?;
                write_dataset_csv(&self.artifacts.path(&rel), &injected).map_err(|e| PipelineError::stage("inject", e))?;
                self.artifacts.record(&rel).map_err(io_stage("inject"))?;
                let truth_list: Vec<usize> = truth.iter().copied().collect();
                self.artifacts
                    .write(&format!("detection/{season}_truth.json"), &json_bytes(&truth_list))
                    .map_err(io_stage("inject"))?;
                self.artifacts.finish_stage("inject", Some(season.to_string()), b"");
                injected_sets.push(injected);
                truths[k] = Some(truth);
            }
            datasets = injected_sets;
        }

        let mut detection = Vec::new();
        if config.anomaly == AnomalyMode::DetectSubstitute {
            self.enter("detect");
            let mut cleaned = Vec::new();
            for (k, ds) in datasets.into_iter().enumerate() {
                let (clean, summary) = clean_dataset(config, ds, truths[k].as_ref())?;
                let season = clean.season;
                self.artifacts
                    .write(&format!("detection/{season}.json"), &json_bytes(&summary))
                    .map_err(io_stage("detect"))?;
                let rel = format!("datasets/{season}_clean.csv");
                write_dataset_csv(&self.artifacts.path(&rel), &clean).map_err(|e| PipelineError::stage("detect", e))?;
                self.artifacts.record(&rel).map_err(io_stage("detect"))?;
                self.artifacts.finish_stage("detect", Some(season.to_string()), b"");
                cleaned.push(clean);
                detection.push(summary);
            }
            datasets = cleaned;
        }

        self.enter("window");
        let mut splits = Vec::new();
        for ds in &datasets {
            let samples = make_windows(ds, config.window).map_err(|e| PipelineError::stage("window", e))?;
            let split = split_train_test(samples, config.test_year);
            if split.train.is_empty() || split.test.is_empty() {
                return Err(PipelineError::stage(
                    "window",
                    format!("season {}: {}", ds.season, split.warnings.join("; ")),
                ));
            }
            self.artifacts
                .finish_stage("window", Some(ds.season.to_string()), &samples_digest(&split));
            splits.push(split);
        }

        self.enter("train");
        let mut models = Vec::new();
        let mut loss_traces = Vec::new();
        for ((ds, s), split) in datasets.iter().zip(&seeds).zip(&splits) {
            log::info!("training {} on {} samples", ds.season, split.train.len());
            let outcome = fit_dataset(config, s, split)?;
            let rel = format!("checkpoints/{}.ckpt", ds.season);
            let path = self.artifacts.prepare(&rel).map_err(io_stage("train"))?;
            let meta = checkpoint_meta(config, ds, s);
            save_checkpoint(&path, &outcome.model, &meta).map_err(|e| PipelineError::stage("train", e))?;
            self.artifacts.record(&rel).map_err(io_stage("train"))?;
            let trace = serde_json::json!({ "season": ds.season, "loss_trace": outcome.loss_trace });
            self.artifacts
                .write(&format!("reports/{}_training.json", ds.season), &json_bytes(&trace))
                .map_err(io_stage("train"))?;
            self.artifacts.finish_stage("train", Some(ds.season.to_string()), b"");
            loss_traces.push(outcome.loss_trace);
            models.push(outcome.model);
        }

        self.enter("evaluate");
        let echo = self.artifacts.manifest.config.clone();
        let mut reports = Vec::new();
        for (((ds, s), split), model) in datasets.iter().zip(&seeds).zip(&splits).zip(&models) {
            let predictions = model.predict(&split.test).map_err(|e| PipelineError::stage("evaluate", e))?;
            let targets: Vec<f64> = split.test.iter().map(|t| t.target).collect();
            let unit_scale = if config.raw_units { ds.scaler.iqr[0] } else { 1.0 };
            let report = evaluate(&predictions, &targets, unit_scale, config.bin_width, report_meta(config, ds.season, s))
                .map_err(|e| PipelineError::stage("evaluate", e))?;
            let file = ReportFile { report: report.clone(), config: echo.clone() };
            self.artifacts
                .write(&format!("reports/{}.json", ds.season), &json_bytes(&file))
                .map_err(io_stage("evaluate"))?;
            self.artifacts
                .write(&format!("histograms/{}.csv", ds.season), histogram_csv(&report.histogram).as_bytes())
                .map_err(io_stage("evaluate"))?;
            self.artifacts.finish_stage("evaluate", Some(ds.season.to_string()), b"");
            reports.push(report);
        }

        let mut average = None;
        if reports.len() > 1 {
            self.enter("compare");
            let table = compare_experiments(&reports, &[]);
            let row = table.rows.into_iter().next();
            self.artifacts
                .write("reports/average.json", &json_bytes(&row))
                .map_err(io_stage("compare"))?;
            self.artifacts.finish_stage("compare", None, b"");
            average = row;
        }

        self.artifacts.write_manifest().map_err(io_stage("manifest"))?;
        Ok(PipelineOutcome {
            output_dir: self.artifacts.root().to_path_buf(),
            reports,
            average,
            detection,
            loss_traces,
            manifest: self.artifacts.manifest.clone(),
        })
    }
}

/// Runs every stage in order, writing artifacts and `manifest.json` under
/// `config.output_dir`. On a stage failure the partial artifacts are moved
/// under `failed/` next to a record of the stage and cause.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    let root = &config.output_dir;
    fs::create_dir_all(root).map_err(io_stage("setup"))?;
    clear_run_entries(root).map_err(io_stage("setup"))?;
    let mut run = Run {
        config,
        artifacts: Artifacts::new(root, Manifest::new(config)),
        stage: "setup",
    };
    match run.execute() {
        Ok(outcome) => Ok(outcome),
        Err(err) => {
            let (stage, cause) = match &err {
                PipelineError::Stage { stage, cause } => (*stage, cause.clone()),
                PipelineError::Validation(m) => (run.stage, m.clone()),
            };
            log::error!("stage {stage} failed: {cause}");
            if let Err(e) = quarantine(root, stage, &cause) {
                log::error!("could not move partial artifacts under failed/: {e}");
            }
            Err(PipelineError::Stage { stage, cause })
        }
    }
}

/// Human-readable plan of what [`run_pipeline`] would do.
pub fn describe_plan(config: &ExperimentConfig) -> String {
    let mut lines = Vec::new();
    let source = match (&config.csv, &config.synth) {
        (Some(paths), _) => format!(
            "csv: {}",
            paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
        ),
        (None, Some(s)) => format!("synthetic {}-{} (seed {})", s.start_year, s.end_year, s.seed),
        (None, None) => "none".into(),
    };
    lines.push(format!("source      {source}"));
    if let Some(h) = &config.holidays {
        lines.push(format!("holidays    {}", h.display()));
    }
    lines.push(format!("output      {}", config.output_dir.display()));
    lines.push(format!("stages      ingest, fill, scale (years <= {}), split ({})", config.train_cutoff_year, config.seasonality));
    if let Some(i) = &config.injection {
        lines.push(format!("            inject rate {} magnitude {} weather share {}", i.rate, i.magnitude, i.weather_share));
    }
    if config.anomaly == AnomalyMode::DetectSubstitute {
        lines.push(format!("            detect eps {} min_samples {}, substitute week back", config.dbscan.eps, config.dbscan.min_samples));
    }
    lines.push(format!(
        "            window {}, test year {}, train {} loss for {} epochs (batch {}), evaluate bin width {}{}",
        config.window,
        config.test_year,
        config.train.loss.kind,
        config.train.epochs,
        config.train.batch_size,
        config.bin_width,
        if config.raw_units { " in raw units" } else { "" }
    ));
    for season in config.seasons() {
        let s = derive_seeds(config.seed, season);
        lines.push(format!(
            "season {season:<4} model seed {} shuffle seed {} injection seed {}",
            s.model, s.shuffle, s.injection
        ));
    }
    lines.join("\n")
}

/// Reads a manifest written by [`run_pipeline`].
pub fn read_manifest(dir: &Path) -> Result<Manifest, PipelineError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(io_stage("manifest"))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::stage("manifest", e))
}

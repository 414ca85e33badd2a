use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use loadcast::anomaly::{detect_and_substitute, inject_outliers, DbscanParams, InjectionSpec};
use loadcast::evaluation::{evaluate as score, histogram_csv, AnomalyMode, ReportMeta, SeasonalityMode, Units};
use loadcast::losses::LossKind;
use loadcast::lstm::{load_checkpoint, save_checkpoint};
use loadcast::pipeline::{
    checkpoint_meta, derive_seeds, describe_plan, expand_cells, fit_dataset, prepare_datasets, report_meta,
    run_matrix, run_pipeline, ExperimentConfig, MatrixAxes,
};
use loadcast::synth::{generate, SynthSpec};
use loadcast::timeseries::{
    apply_scaler, fill_missing, fit_robust_scaler, ingest_many, make_windows, merge_calendar, read_dataset_csv,
    read_holidays, split_seasons, split_train_test, whole_dataset, write_dataset_csv, write_holidays,
    write_series_csv, CsvSchema, RobustScalerParams, SeasonId, TRAIN_CUTOFF_YEAR,
};
use serde::Serialize;

use crate::overrides::ConfigArgs;
use crate::Failure;

fn invalid(message: impl std::fmt::Display) -> Failure {
    Failure::Validation(message.to_string())
}

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{what} {} does not exist", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T, stage: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Failure::stage(stage, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(|e| Failure::stage(stage, e))
}

fn read_scaler(path: &Path) -> Result<RobustScalerParams, Failure> {
    require_file(path, "scaler file")?;
    let text = fs::read_to_string(path).map_err(|e| Failure::stage("read", e))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn create_parent(path: &Path, stage: &str) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Failure::stage(stage, e)),
        _ => Ok(()),
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output CSV in the input schema.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Where to write the holiday dates.
    #[arg(long, value_name = "FILE")]
    pub holidays_out: Option<PathBuf>,
    /// Generator spec (JSON); flags below override it.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub start_year: Option<i32>,
    #[arg(long)]
    pub end_year: Option<i32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub base_load: Option<f64>,
    #[arg(long)]
    pub daily_amp: Option<f64>,
    #[arg(long)]
    pub weekly_amp: Option<f64>,
    #[arg(long)]
    pub seasonal_amp: Option<f64>,
    #[arg(long)]
    pub temp_coupling: Option<f64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub holiday_damping: Option<f64>,
}

pub fn synth(a: SynthArgs) -> Result<(), Failure> {
    let mut spec = match &a.spec {
        Some(p) => {
            require_file(p, "spec file")?;
            let text = fs::read_to_string(p).map_err(|e| Failure::stage("synth", e))?;
            serde_json::from_str::<SynthSpec>(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::default(),
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    if let Some(v) = a.start_year {
        spec.start_year = v;
    }
    if let Some(v) = a.end_year {
        spec.end_year = v;
    }
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    set(&mut spec.base_load, a.base_load);
    set(&mut spec.daily_amp, a.daily_amp);
    set(&mut spec.weekly_amp, a.weekly_amp);
    set(&mut spec.seasonal_amp, a.seasonal_amp);
    set(&mut spec.temp_coupling, a.temp_coupling);
    set(&mut spec.noise_std, a.noise_std);
    set(&mut spec.holiday_damping, a.holiday_damping);
    spec.validate().map_err(invalid)?;

    let series = generate(&spec);
    create_parent(&a.out, "synth")?;
    write_series_csv(&a.out, &series).map_err(|e| Failure::stage("synth", e))?;
    if let Some(h) = &a.holidays_out {
        create_parent(h, "synth")?;
        write_holidays(h, &series.holidays).map_err(|e| Failure::stage("synth", e))?;
    }
    println!("wrote {} hourly records to {}", series.len(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Input CSV files, merged in order.
    #[arg(long, value_name = "FILE", required = true)]
    pub csv: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub holidays: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = TRAIN_CUTOFF_YEAR)]
    pub train_cutoff_year: i32,
    /// Write one dataset over the whole series instead of three seasons.
    #[arg(long)]
    pub no_season_split: bool,
}

pub fn ingest(a: IngestArgs) -> Result<(), Failure> {
    for p in &a.csv {
        require_file(p, "input file")?;
    }
    let mut series = ingest_many(&a.csv, &CsvSchema::default()).map_err(|e| Failure::stage("ingest", e))?;
    if let Some(h) = &a.holidays {
        require_file(h, "holiday file")?;
        let holidays = read_holidays(h).map_err(|e| Failure::stage("ingest", e))?;
        series = merge_calendar(series, &holidays);
    }
    let series = fill_missing(series).map_err(|e| Failure::stage("fill", e))?;
    let scaler = fit_robust_scaler(&series, a.train_cutoff_year).map_err(|e| Failure::stage("scale", e))?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::stage("ingest", e))?;
    write_series_csv(&a.out_dir.join("filled.csv"), &series).map_err(|e| Failure::stage("fill", e))?;
    write_json(&a.out_dir.join("scaler.json"), &scaler, "scale")?;
    let scaled = apply_scaler(series, &scaler);
    let datasets = if a.no_season_split {
        vec![whole_dataset(&scaled, &scaler)]
    } else {
        split_seasons(&scaled, &scaler).to_vec()
    };
    for ds in &datasets {
        let path = a.out_dir.join(format!("{}_scaled.csv", ds.season));
        write_dataset_csv(&path, ds).map_err(|e| Failure::stage("split", e))?;
        println!("{}: {} records -> {}", ds.season, ds.len(), path.display());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct InjectArgs {
    /// Season dataset written by `ingest` or the pipeline.
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub scaler: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6.0)]
    pub magnitude: f64,
    #[arg(long, default_value_t = 0.5)]
    pub weather_share: f64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Write the corrupted record indices as JSON.
    #[arg(long, value_name = "FILE")]
    pub truth_out: Option<PathBuf>,
}

pub fn inject(a: InjectArgs) -> Result<(), Failure> {
    require_file(&a.dataset, "dataset")?;
    let spec = InjectionSpec {
        rate: a.rate,
        seed: a.seed,
        weather_share: a.weather_share,
        magnitude: a.magnitude,
    };
    spec.validate().map_err(invalid)?;
    let ds = read_dataset_csv(&a.dataset, read_scaler(&a.scaler)?).map_err(|e| Failure::stage("read", e))?;
    let (injected, truth) = inject_outliers(ds, &spec).map_err(|e| Failure::stage("inject", e))?;
    create_parent(&a.out, "inject")?;
    write_dataset_csv(&a.out, &injected).map_err(|e| Failure::stage("inject", e))?;
    if let Some(t) = &a.truth_out {
        write_json(t, &truth, "inject")?;
    }
    println!("injected {} outliers into {} records", truth.len(), injected.len());
    Ok(())
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub scaler: PathBuf,
    #[arg(long, default_value_t = 0.11)]
    pub eps: f64,
    #[arg(long, default_value_t = 3)]
    pub min_samples: usize,
    /// Inject outliers first and score detection against them.
    #[arg(long)]
    pub inject_rate: Option<f64>,
    #[arg(long, default_value_t = 0, requires = "inject_rate")]
    pub inject_seed: u64,
    /// Ground-truth indices (JSON list) for scoring.
    #[arg(long, value_name = "FILE", conflicts_with = "inject_rate")]
    pub truth: Option<PathBuf>,
    /// Write the cleaned dataset.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write flagged indices and, with ground truth, precision and recall.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

pub fn detect(a: DetectArgs) -> Result<(), Failure> {
    require_file(&a.dataset, "dataset")?;
    let params = DbscanParams {
        eps: a.eps,
        min_samples: a.min_samples,
    };
    params.validate().map_err(invalid)?;
    let mut ds = read_dataset_csv(&a.dataset, read_scaler(&a.scaler)?).map_err(|e| Failure::stage("read", e))?;
    let mut truth: Option<BTreeSet<usize>> = None;
    if let Some(rate) = a.inject_rate {
        let spec = InjectionSpec {
            rate,
            seed: a.inject_seed,
            ..Default::default()
        };
        spec.validate().map_err(invalid)?;
        let (injected, t) = inject_outliers(ds, &spec).map_err(|e| Failure::stage("inject", e))?;
        ds = injected;
        truth = Some(t);
    }
    if let Some(path) = &a.truth {
        require_file(path, "truth file")?;
        let text = fs::read_to_string(path).map_err(|e| Failure::stage("read", e))?;
        truth = Some(serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?);
    }
    let (clean, summary) = detect_and_substitute(ds, &params, truth.as_ref()).map_err(|e| Failure::stage("detect", e))?;
    if let Some(out) = &a.out {
        create_parent(out, "detect")?;
        write_dataset_csv(out, &clean).map_err(|e| Failure::stage("detect", e))?;
    }
    if let Some(r) = &a.report {
        write_json(r, &summary, "detect")?;
    }
    print!("{}: {} clusters, {} flagged, {} holiday records exempt", summary.season, summary.clusters, summary.flagged.len(), summary.holiday_exempt);
    if let Some(s) = &summary.score {
        let fmt = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3}"));
        print!(", precision {} recall {}", fmt(s.precision), fmt(s.recall));
    }
    println!();
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Train only this season (S1, S2, S3, or ALL with --no-season-split).
    #[arg(long)]
    pub season: Option<SeasonId>,
    /// Train one model on the unsplit series.
    #[arg(long)]
    pub no_season_split: bool,
    /// Skip anomaly detection and substitution.
    #[arg(long)]
    pub skip_anomaly_removal: bool,
    /// Directory for `<season>.ckpt` files.
    #[arg(long, value_name = "DIR", default_value = "checkpoints")]
    pub checkpoint_out: PathBuf,
}

pub fn train(a: TrainArgs) -> Result<(), Failure> {
    let mut config = a.config.resolve()?;
    if a.no_season_split {
        config.seasonality = SeasonalityMode::Whole;
    }
    if a.skip_anomaly_removal {
        config.anomaly = AnomalyMode::Off;
    }
    config.validate()?;
    if let Some(s) = a.season {
        if !config.seasons().contains(&s) {
            return Err(invalid(format!("season {s} is not produced in {} mode", config.seasonality)));
        }
    }
    if a.config.dry_run {
        println!("{}", describe_plan(&config));
        println!("checkpoints {}", a.checkpoint_out.display());
        return Ok(());
    }
    fs::create_dir_all(&a.checkpoint_out).map_err(|e| Failure::stage("train", e))?;
    for prepared in prepare_datasets(&config)? {
        let ds = &prepared.dataset;
        if a.season.is_some_and(|s| s != ds.season) {
            continue;
        }
        let samples = make_windows(ds, config.window).map_err(|e| Failure::stage("window", e))?;
        let split = split_train_test(samples, config.test_year);
        if split.train.is_empty() {
            return Err(Failure::stage("window", format!("season {}: no training samples", ds.season)));
        }
        let outcome = fit_dataset(&config, &prepared.seeds, &split)?;
        let path = a.checkpoint_out.join(format!("{}.ckpt", ds.season));
        save_checkpoint(&path, &outcome.model, &checkpoint_meta(&config, ds, &prepared.seeds))
            .map_err(|e| Failure::stage("train", e))?;
        let first = outcome.loss_trace.first().copied().unwrap_or(f64::NAN);
        let last = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
        println!(
            "{}: {} samples, loss {first:.5} -> {last:.5}, checkpoint {}",
            ds.season,
            split.train.len(),
            path.display()
        );
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Season dataset whose test-year windows are scored.
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    pub bin_width: f64,
    /// Multiply errors by the consumption IQR stored with the checkpoint.
    #[arg(long)]
    pub raw_units: bool,
    /// Defaults to the test year stored with the checkpoint.
    #[arg(long)]
    pub test_year: Option<i32>,
    /// Write the report here instead of printing it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub histogram_out: Option<PathBuf>,
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    require_file(&a.checkpoint, "checkpoint")?;
    require_file(&a.dataset, "dataset")?;
    if !(a.bin_width > 0.0) {
        return Err(invalid(format!("bin width must be positive, got {}", a.bin_width)));
    }
    let (model, meta) = load_checkpoint(&a.checkpoint).map_err(|e| Failure::stage("evaluate", e))?;
    let scaler: RobustScalerParams = serde_json::from_value(meta["scaler"].clone())
        .map_err(|e| Failure::stage("evaluate", format!("checkpoint has no usable scaler: {e}")))?;
    let window = meta["window"].as_u64().unwrap_or(4) as usize;
    let test_year = a
        .test_year
        .or_else(|| meta["test_year"].as_i64().map(|y| y as i32))
        .unwrap_or(loadcast::timeseries::TEST_YEAR);
    let mut report_meta: ReportMeta = serde_json::from_value(meta["report"].clone())
        .map_err(|e| Failure::stage("evaluate", format!("checkpoint has no report metadata: {e}")))?;
    report_meta.units = if a.raw_units { Units::Raw } else { Units::Scaled };
    let unit_scale = if a.raw_units { scaler.iqr[0] } else { 1.0 };

    let ds = read_dataset_csv(&a.dataset, scaler).map_err(|e| Failure::stage("read", e))?;
    let samples = make_windows(&ds, window).map_err(|e| Failure::stage("window", e))?;
    let split = split_train_test(samples, test_year);
    let predictions = model.predict(&split.test).map_err(|e| Failure::stage("evaluate", e))?;
    let targets: Vec<f64> = split.test.iter().map(|s| s.target).collect();
    let report = score(&predictions, &targets, unit_scale, a.bin_width, report_meta).map_err(|e| Failure::stage("evaluate", e))?;
    if let Some(h) = &a.histogram_out {
        create_parent(h, "evaluate")?;
        fs::write(h, histogram_csv(&report.histogram)).map_err(|e| Failure::stage("evaluate", e))?;
    }
    match &a.out {
        Some(out) => {
            write_json(out, &report, "evaluate")?;
            let fmt = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.4}"));
            println!(
                "under_rmse {} ({}), over_rmse {} ({}), exact {}",
                fmt(report.under_rmse),
                report.n_under,
                fmt(report.over_rmse),
                report.n_over,
                report.n_exact
            );
        }
        None => println!("{}", serde_json::to_string_pretty(&report).expect("serializable")),
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr<Err = String>>(raw: &Option<String>) -> Result<Vec<T>, Failure> {
    match raw {
        None => Ok(Vec::new()),
        Some(s) => s.split(',').map(|p| p.trim().parse::<T>().map_err(invalid)).collect(),
    }
}

fn parse_rates(raw: &Option<String>) -> Result<Vec<Option<f64>>, Failure> {
    match raw {
        None => Ok(Vec::new()),
        Some(s) => s
            .split(',')
            .map(|p| match p.trim() {
                "none" | "0" => Ok(None),
                v => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| invalid(format!("bad injection rate `{v}`"))),
            })
            .collect(),
    }
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated losses, e.g. `mse,al1,al2`.
    #[arg(long)]
    pub losses: Option<String>,
    /// Comma-separated anomaly modes, e.g. `off,detect_substitute`.
    #[arg(long)]
    pub anomaly_modes: Option<String>,
    /// Comma-separated seasonality modes, e.g. `split,whole`.
    #[arg(long)]
    pub seasonality_modes: Option<String>,
    /// Comma-separated injection rates; `none` for no injection.
    #[arg(long)]
    pub injection_rates: Option<String>,
    /// Cells run concurrently.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

pub fn matrix(a: MatrixArgs) -> Result<(), Failure> {
    let base = a.config.resolve()?;
    let axes = MatrixAxes {
        losses: parse_list::<LossKind>(&a.losses)?,
        anomaly: parse_list::<AnomalyMode>(&a.anomaly_modes)?,
        seasonality: parse_list::<SeasonalityMode>(&a.seasonality_modes)?,
        injection_rates: parse_rates(&a.injection_rates)?,
    };
    base.validate()?;
    if a.config.dry_run {
        let cells = expand_cells(&base, &axes);
        println!("{} cells under {}:", cells.len(), base.output_dir.join("cells").display());
        for c in &cells {
            println!("  {}", c.label());
        }
        println!("{}", describe_plan(&base));
        return Ok(());
    }
    let outcome = run_matrix(&base, &axes, a.workers)?;
    print!("{}", outcome.table.to_text());
    for (label, cause) in &outcome.failures {
        eprintln!("cell {label} failed: {cause}");
    }
    if !outcome.failures.is_empty() && outcome.failures.len() == outcome.cells.len() {
        return Err(Failure::Stage("every matrix cell failed".into()));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn print_config(config: &ExperimentConfig) {
    println!("{}", config.to_json());
}

pub fn run(a: RunArgs) -> Result<(), Failure> {
    let config = a.config.resolve()?;
    config.validate()?;
    if a.config.dry_run {
        print_config(&config);
        println!("{}", describe_plan(&config));
        return Ok(());
    }
    let outcome = run_pipeline(&config)?;
    let fmt = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.4}"));
    for r in &outcome.reports {
        let seeds = derive_seeds(config.seed, r.metadata.season);
        debug_assert_eq!(report_meta(&config, r.metadata.season, &seeds), r.metadata);
        println!(
            "{:<4} under_rmse {} ({}), over_rmse {} ({})",
            r.metadata.season.to_string(),
            fmt(r.under_rmse),
            r.n_under,
            fmt(r.over_rmse),
            r.n_over
        );
    }
    if let Some(avg) = &outcome.average {
        println!("mean under_rmse {}, over_rmse {}", fmt(avg.under_rmse), fmt(avg.over_rmse));
    }
    println!("artifacts in {}", outcome.output_dir.display());
    Ok(())
}

//! Config resolution: defaults, then the config file, then `--set`
//! overrides, then the named flags.

use std::path::PathBuf;

use clap::Args;
use loadcast::evaluation::{AnomalyMode, SeasonalityMode};
use loadcast::losses::LossKind;
use loadcast::lstm::OutputActivation;
use loadcast::pipeline::ExperimentConfig;
use serde_json::Value;

use crate::Failure;

#[derive(Args, Debug, Default, Clone)]
pub struct ConfigArgs {
    /// Experiment config (JSON). Omitted keys take their defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override any config key by dotted path, e.g. `train.adam.learning_rate=5e-4`.
    /// The value is parsed as JSON, falling back to a plain string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Print the resolved config and plan without running anything.
    #[arg(long)]
    pub dry_run: bool,

    /// Input CSV files (replaces any source from the config file).
    #[arg(long, value_name = "FILE")]
    pub csv: Vec<PathBuf>,
    /// Use the synthetic generator as the source.
    #[arg(long)]
    pub synth: bool,
    #[arg(long)]
    pub synth_seed: Option<u64>,
    #[arg(long)]
    pub synth_start_year: Option<i32>,
    #[arg(long)]
    pub synth_end_year: Option<i32>,
    #[arg(long, value_name = "FILE")]
    pub holidays: Option<PathBuf>,

    /// split or whole
    #[arg(long)]
    pub seasonality: Option<SeasonalityMode>,
    /// off or detect_substitute
    #[arg(long)]
    pub anomaly: Option<AnomalyMode>,
    /// Inject this fraction of outliers after season splitting.
    #[arg(long)]
    pub inject_rate: Option<f64>,
    #[arg(long)]
    pub inject_magnitude: Option<f64>,
    #[arg(long)]
    pub inject_weather_share: Option<f64>,
    /// Remove any injection configured in the config file.
    #[arg(long, conflicts_with = "inject_rate")]
    pub no_injection: bool,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_samples: Option<usize>,

    /// mse, al1 or al2
    #[arg(long)]
    pub loss: Option<LossKind>,
    #[arg(long = "loss-a")]
    pub loss_a: Option<f64>,
    #[arg(long = "loss-b")]
    pub loss_b: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Clip batch gradients to this norm.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub hidden1: Option<usize>,
    #[arg(long)]
    pub hidden2: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// identity or relu
    #[arg(long)]
    pub activation: Option<String>,

    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub train_cutoff_year: Option<i32>,
    #[arg(long)]
    pub test_year: Option<i32>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Report errors in consumption units instead of scaled units.
    #[arg(long)]
    pub raw_units: bool,
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Global seed; per-season seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), Failure> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Failure::Validation(format!("bad key `{key}`")));
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let map = node
            .as_object_mut()
            .ok_or_else(|| Failure::Validation(format!("`{key}`: `{part}` is not inside an object")))?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Applies `KEY=VALUE` overrides to a JSON config document.
pub fn apply_sets(doc: &mut Value, sets: &[String]) -> Result<(), Failure> {
    for s in sets {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| Failure::Validation(format!("--set expects KEY=VALUE, got `{s}`")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(doc, key.trim(), value)?;
    }
    Ok(())
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut doc = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
            }
            None => serde_json::json!({}),
        };
        apply_sets(&mut doc, &self.sets)?;
        let mut c: ExperimentConfig = serde_json::from_value(doc).map_err(|e| Failure::Validation(format!("config: {e}")))?;
        self.apply(&mut c)?;
        Ok(c)
    }

    fn apply(&self, c: &mut ExperimentConfig) -> Result<(), Failure> {
        if !self.csv.is_empty() {
            c.csv = Some(self.csv.clone());
            c.synth = None;
        }
        if self.synth || self.synth_seed.is_some() || self.synth_start_year.is_some() || self.synth_end_year.is_some() {
            let mut spec = c.synth.clone().unwrap_or_default();
            if let Some(v) = self.synth_seed {
                spec.seed = v;
            }
            if let Some(v) = self.synth_start_year {
                spec.start_year = v;
            }
            if let Some(v) = self.synth_end_year {
                spec.end_year = v;
            }
            c.synth = Some(spec);
            c.csv = None;
        }
        if self.holidays.is_some() {
            c.holidays = self.holidays.clone();
        }
        if let Some(v) = self.seasonality {
            c.seasonality = v;
        }
        if let Some(v) = self.anomaly {
            c.anomaly = v;
        }
        if self.no_injection {
            c.injection = None;
        }
        if self.inject_rate.is_some() || self.inject_magnitude.is_some() || self.inject_weather_share.is_some() {
            let mut spec = c.injection.unwrap_or_default();
            if let Some(v) = self.inject_rate {
                spec.rate = v;
            }
            if let Some(v) = self.inject_magnitude {
                spec.magnitude = v;
            }
            if let Some(v) = self.inject_weather_share {
                spec.weather_share = v;
            }
            c.injection = Some(spec);
        }
        if let Some(v) = self.eps {
            c.dbscan.eps = v;
        }
        if let Some(v) = self.min_samples {
            c.dbscan.min_samples = v;
        }
        if let Some(v) = self.loss {
            c.train.loss.kind = v;
        }
        if let Some(v) = self.loss_a {
            c.train.loss.a = v;
        }
        if let Some(v) = self.loss_b {
            c.train.loss.b = v;
        }
        if let Some(v) = self.eps1 {
            c.train.loss.eps1 = v;
        }
        if let Some(v) = self.eps2 {
            c.train.loss.eps2 = v;
        }
        if let Some(v) = self.epochs {
            c.train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            c.train.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            c.train.adam.learning_rate = v;
        }
        if self.clip_norm.is_some() {
            c.train.clip_norm = self.clip_norm;
        }
        if let Some(v) = self.hidden1 {
            c.model.hidden1 = v;
        }
        if let Some(v) = self.hidden2 {
            c.model.hidden2 = v;
        }
        if let Some(v) = self.dropout {
            c.model.dropout = v;
        }
        if let Some(v) = &self.activation {
            c.model.activation = serde_json::from_value::<OutputActivation>(Value::String(v.clone()))
                .map_err(|_| Failure::Validation(format!("unknown activation `{v}`")))?;
        }
        if let Some(v) = self.window {
            c.window = v;
        }
        if let Some(v) = self.train_cutoff_year {
            c.train_cutoff_year = v;
        }
        if let Some(v) = self.test_year {
            c.test_year = v;
        }
        if let Some(v) = self.bin_width {
            c.bin_width = v;
        }
        if self.raw_units {
            c.raw_units = true;
        }
        if let Some(v) = &self.output_dir {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        Ok(())
    }
}

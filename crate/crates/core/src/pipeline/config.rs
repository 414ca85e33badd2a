use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::anomaly::{DbscanParams, InjectionSpec};
use crate::error::PipelineError;
use crate::evaluation::{AnomalyMode, SeasonalityMode};
use crate::lstm::{ModelConfig, TrainConfig};
use crate::synth::SynthSpec;
use crate::timeseries::{SeasonId, FEATURE_COUNT, TEST_YEAR, TRAIN_CUTOFF_YEAR};

/// One end-to-end experiment. Exactly one of `csv` and `synth` must be set.
///
/// The seed fields nested in `model`, `train` and `injection` are replaced
/// per season by values derived from `seed`; see [`derive_seeds`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub csv: Option<Vec<PathBuf>>,
    pub synth: Option<SynthSpec>,
    pub holidays: Option<PathBuf>,
    pub seasonality: SeasonalityMode,
    pub anomaly: AnomalyMode,
    pub injection: Option<InjectionSpec>,
    pub dbscan: DbscanParams,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub window: usize,
    pub train_cutoff_year: i32,
    pub test_year: i32,
    pub bin_width: f64,
    pub raw_units: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            csv: None,
            synth: None,
            holidays: None,
            seasonality: SeasonalityMode::Split,
            anomaly: AnomalyMode::DetectSubstitute,
            injection: None,
            dbscan: DbscanParams::default(),
            train: TrainConfig::default(),
            model: ModelConfig::default(),
            window: 4,
            train_cutoff_year: TRAIN_CUTOFF_YEAR,
            test_year: TEST_YEAR,
            bin_width: 0.02,
            raw_units: false,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn invalid(message: impl std::fmt::Display) -> PipelineError {
    PipelineError::Validation(message.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant, including that referenced files exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        match (&self.csv, &self.synth) {
            (Some(_), Some(_)) => return Err(invalid("both `csv` and `synth` sources are set")),
            (None, None) => return Err(invalid("no data source: set `csv` or `synth`")),
            (Some(paths), None) => {
                if paths.is_empty() {
                    return Err(invalid("`csv` lists no files"));
                }
                for p in paths {
                    if !p.is_file() {
                        return Err(invalid(format!("input file {} does not exist", p.display())));
                    }
                }
            }
            (None, Some(spec)) => spec.validate().map_err(invalid)?,
        }
        if let Some(h) = &self.holidays {
            if !h.is_file() {
                return Err(invalid(format!("holiday file {} does not exist", h.display())));
            }
        }
        self.dbscan.validate().map_err(invalid)?;
        if let Some(inj) = &self.injection {
            inj.validate().map_err(invalid)?;
        }
        self.train.validate().map_err(invalid)?;
        self.model.validate().map_err(invalid)?;
        if self.model.input_size != FEATURE_COUNT {
            return Err(invalid(format!(
                "model.input_size must be {FEATURE_COUNT}, got {}",
                self.model.input_size
            )));
        }
        if self.window == 0 {
            return Err(invalid("window must be at least 1"));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(invalid(format!("bin_width must be positive, got {}", self.bin_width)));
        }
        if self.test_year <= self.train_cutoff_year {
            return Err(invalid(format!(
                "test_year {} must come after train_cutoff_year {}",
                self.test_year, self.train_cutoff_year
            )));
        }
        Ok(())
    }

    pub fn seasons(&self) -> Vec<SeasonId> {
        match self.seasonality {
            SeasonalityMode::Split => SeasonId::SPLIT.to_vec(),
            SeasonalityMode::Whole => vec![SeasonId::All],
        }
    }

    /// Short identifier used for matrix cell directories.
    pub fn label(&self) -> String {
        let inject = match &self.injection {
            Some(i) => format!("inject{}bp", (i.rate * 10_000.0).round() as u32),
            None => "clean".into(),
        };
        format!("{}_{}_{}_{}", self.train.loss.kind, self.anomaly, self.seasonality, inject)
    }
}

/// Seeds used for one season's dataset and model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonSeeds {
    pub model: u64,
    pub shuffle: u64,
    pub injection: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent per-season streams from the global seed. They depend only on
/// the seed and the season, so cells of a matrix that differ in loss or
/// anomaly treatment share initialization, shuffling and injected outliers.
pub fn derive_seeds(global: u64, season: SeasonId) -> SeasonSeeds {
    let s = match season {
        SeasonId::S1 => 1,
        SeasonId::S2 => 2,
        SeasonId::S3 => 3,
        SeasonId::All => 4,
    };
    let base = splitmix64(global);
    SeasonSeeds {
        model: splitmix64(base ^ (s << 8 | 1)),
        shuffle: splitmix64(base ^ (s << 8 | 2)),
        injection: splitmix64(base ^ (s << 8 | 3)),
    }
}

//! Config-driven experiment runner: data loading through evaluation with
//! artifacts and a checksum manifest on disk, and the experiment matrix.

mod config;
mod manifest;
mod matrix;
mod run;

pub use config::{derive_seeds, ExperimentConfig, SeasonSeeds};
pub use manifest::{quarantine, sha256_hex, Artifacts, Manifest, StageRecord, FAILED_DIR, MANIFEST_FILE};
pub use matrix::{expand_cells, run_matrix, CellOutcome, MatrixAxes, MatrixOutcome};
pub use run::{
    checkpoint_meta, clean_dataset, describe_plan, inject_dataset, prepare_datasets, PreparedDataset, fit_dataset, load_series, read_manifest, report_meta, run_pipeline,
    season_datasets, season_train_config, PipelineOutcome, ReportFile,
};

//! Hour-ahead electricity load forecasting: density-based anomaly cleaning of
//! hourly consumption series, season splitting, and a two-layer LSTM trained
//! with symmetric or asymmetric losses, scored by separate under- and
//! overestimation RMSE.

pub mod error;
pub mod timeseries;
pub mod anomaly;
pub mod losses;
pub mod lstm;
pub mod evaluation;
pub mod synth;
pub mod pipeline;

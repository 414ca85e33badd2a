//! Density-based anomaly detection on scaled consumption, the
//! main-cluster/holiday flagging rule, week-back substitution and seeded
//! outlier injection.

mod dbscan;
mod detect;
mod inject;

pub use dbscan::{dbscan, ClusterLabeling, DbscanParams, NOISE};
pub use detect::{
    detect_and_substitute, flag_anomalies, substitute, DetectionScore, DetectionSummary,
};
pub use inject::{inject_outliers, InjectionSpec};

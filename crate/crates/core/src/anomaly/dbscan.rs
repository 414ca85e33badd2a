use serde::{Deserialize, Serialize};

use crate::error::AnomalyError;

pub const NOISE: i32 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_samples: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams {
            eps: 0.11,
            min_samples: 3,
        }
    }
}

impl DbscanParams {
    pub fn validate(&self) -> Result<(), AnomalyError> {
        if self.eps > 0.0 && self.eps.is_finite() && self.min_samples >= 1 {
            Ok(())
        } else {
            Err(AnomalyError::InvalidParams {
                eps: self.eps,
                min_samples: self.min_samples,
            })
        }
    }
}

/// Cluster labels in input order: `-1` is noise, clusters are numbered in
/// discovery order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub labels: Vec<i32>,
    /// Member count per cluster id.
    pub sizes: Vec<usize>,
    /// Largest cluster, lowest id on ties. `None` when every point is noise.
    pub main_cluster: Option<i32>,
}

impl ClusterLabeling {
    pub fn from_labels(labels: Vec<i32>) -> Self {
        let k = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        let main_cluster = sizes
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
            .map(|(i, _)| i as i32);
        ClusterLabeling {
            labels,
            sizes,
            main_cluster,
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

/// DBSCAN over scalar values with distance `|a - b|`.
///
/// A point is core when at least `min_samples` points (itself included) lie
/// within `eps`. Clusters are the connected components of core points plus
/// the border points within `eps` of a core. Cluster ids follow the input
/// position of each component's first core point, and a border point that
/// touches two clusters joins the one with the lower id. This is the labeling
/// produced by the classic sequential expansion in input order.
///
/// Runs in `O(n log n)`: after sorting, each neighborhood is a contiguous
/// range and two cores are connected exactly when no gap wider than `eps`
/// separates them in the sorted sequence of cores.
pub fn dbscan(points: &[f64], params: &DbscanParams) -> Result<ClusterLabeling, AnomalyError> {
    params.validate()?;
    let n = points.len();
    let eps = params.eps;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].total_cmp(&points[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| points[i]).collect();

    // Neighborhood size for each sorted position.
    let is_core: Vec<bool> = (0..n)
        .map(|p| {
            let v = sorted[p];
            let lo = sorted.partition_point(|&q| v - q > eps);
            let hi = sorted.partition_point(|&q| q - v <= eps);
            hi - lo >= params.min_samples
        })
        .collect();

    // Components over the sorted core sequence.
    let mut component = vec![usize::MAX; n];
    let mut first_index: Vec<usize> = Vec::new();
    let mut prev_core: Option<usize> = None;
    for p in 0..n {
        if !is_core[p] {
            continue;
        }
        let joins = prev_core.is_some_and(|q| (sorted[p] - sorted[q]).abs() <= eps);
        if !joins {
            first_index.push(usize::MAX);
        }
        let c = first_index.len() - 1;
        component[p] = c;
        first_index[c] = first_index[c].min(order[p]);
        prev_core = Some(p);
    }

    // Renumber components by discovery order.
    let mut by_discovery: Vec<usize> = (0..first_index.len()).collect();
    by_discovery.sort_by_key(|&c| first_index[c]);
    let mut cluster_id = vec![0i32; first_index.len()];
    for (id, &c) in by_discovery.iter().enumerate() {
        cluster_id[c] = id as i32;
    }

    let mut labels = vec![NOISE; n];
    let mut last_core: Option<usize> = None;
    let mut next_core = vec![None; n];
    let mut upcoming = None;
    for p in (0..n).rev() {
        next_core[p] = upcoming;
        if is_core[p] {
            upcoming = Some(p);
        }
    }
    for p in 0..n {
        let label = if is_core[p] {
            last_core = Some(p);
            cluster_id[component[p]]
        } else {
            let reach = |q: Option<usize>| {
                q.filter(|&q| (sorted[p] - sorted[q]).abs() <= eps)
                    .map(|q| cluster_id[component[q]])
            };
            match (reach(last_core), reach(next_core[p])) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => NOISE,
            }
        };
        labels[order[p]] = label;
    }
    Ok(ClusterLabeling::from_labels(labels))
}

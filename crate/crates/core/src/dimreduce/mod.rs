//! Reduction of encoder latents to a low-dimensional embedding with UMAP,
//! built from first principles: exact k-NN graph, fuzzy simplicial set, and
//! negative-sampling layout optimization.

mod curve;
mod graph;
mod layout;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedStream;

pub use curve::fit_ab;
pub use graph::{fuzzy_simplicial_set, knn_graph, sigma_residual, FuzzyGraph, Knn};
pub use layout::{optimize_layout, spectral_init};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UmapConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub n_components: usize,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 60,
            min_dist: 0.0,
            spread: 1.0,
            n_components: 2,
            n_epochs: 200,
            negative_sample_rate: 5,
            learning_rate: 1.0,
        }
    }
}

/// Embeds row-major `[n, d]` points into `[n, n_components]`.
/// `n_neighbors` is reduced to `n - 1` when the data set is smaller.
pub fn umap(points: &[f64], d: usize, cfg: &UmapConfig, seed: SeedStream) -> Result<Vec<f64>> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::shape(
            "umap",
            format!("{} values not divisible by dimension {d}", points.len()),
        ));
    }
    let n = points.len() / d;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("UMAP needs at least 2 points, got {n}")));
    }
    let k = cfg.n_neighbors.min(n - 1).max(1);
    let knn = knn_graph(points, d, k)?;
    let graph = fuzzy_simplicial_set(&knn);
    optimize_layout(&graph, cfg, seed)
}

//! Latent-space clustering: k-means, full-covariance GMM, and a
//! Gaussian-emission HMM with fixed transitions.

mod gaussian;
mod gmm;
mod hmm;
mod kmeans;

pub use gaussian::{cholesky, Gaussian, RIDGE};
pub use gmm::{gmm_fit, GmmConfig, GmmModel};
pub use hmm::{
    build_transitions, estimate_self_transition, forward_backward, hmm_fit_and_decode, HmmConfig, HmmModel,
    TransitionSemantics,
};
pub use kmeans::{kmeans, KMeansResult};

/// Hard labels `c(x)` with confidence `p(x)` (the posterior of the chosen
/// label).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub confidence: Vec<f64>,
    pub k: usize,
    /// Row-major `[n, k]`.
    pub posteriors: Vec<f64>,
}

impl ClusterAssignment {
    /// Argmax decoding; ties go to the lowest label.
    pub fn from_posteriors(posteriors: Vec<f64>, k: usize) -> Self {
        let mut labels = Vec::with_capacity(posteriors.len() / k.max(1));
        let mut confidence = Vec::with_capacity(labels.capacity());
        for row in posteriors.chunks(k) {
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            labels.push(best);
            confidence.push(row[best]);
        }
        Self {
            labels,
            confidence,
            k,
            posteriors,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Renames cluster ids: `c → perm[c]`.
    pub fn relabel(&mut self, perm: &[usize]) {
        let k = self.k;
        for l in &mut self.labels {
            *l = perm[*l];
        }
        let mut post = vec![0.0; self.posteriors.len()];
        for (src, dst) in self.posteriors.chunks(k).zip(post.chunks_mut(k)) {
            for (c, &v) in src.iter().enumerate() {
                dst[perm[c]] = v;
            }
        }
        self.posteriors = post;
    }
}

//! Clustering metrics (ACC, macro-F1, ARI, NMI), label alignment, and the
//! window-to-point label reconciliation used for point-wise evaluation.

mod hungarian;
mod report;

use serde::Serialize;

use crate::error::{Error, Result};

pub use hungarian::max_weight_assignment;
pub use report::{
    aggregate_subject_dependent, Granularity, MetricsReport, Scores, Setting, SubjectEntry, SubjectSetting, Timing,
};

/// Counts `n_ij` of points in predicted cluster `i` and true class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub clusters: usize,
    pub classes: usize,
    /// Row-major `[clusters, classes]`.
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    /// `preds[i]` must be `< clusters` and `truth[i] < classes`.
    pub fn new(truth: &[usize], preds: &[usize], classes: usize, clusters: usize) -> Result<Self> {
        if truth.len() != preds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels vs {} predictions",
                truth.len(),
                preds.len()
            )));
        }
        let mut counts = vec![0u64; clusters * classes];
        for (&t, &p) in truth.iter().zip(preds) {
            if t >= classes || p >= clusters {
                return Err(Error::InvalidArgument(format!(
                    "label {t} / prediction {p} outside {classes} classes / {clusters} clusters"
                )));
            }
            counts[p * classes + t] += 1;
        }
        Ok(Self {
            clusters,
            classes,
            counts,
        })
    }

    /// Sizes the table from the largest label present.
    pub fn from_labels(truth: &[usize], preds: &[usize]) -> Result<Self> {
        let classes = truth.iter().max().map_or(0, |m| m + 1);
        let clusters = preds.iter().max().map_or(0, |m| m + 1);
        Self::new(truth, preds, classes, clusters)
    }

    pub fn get(&self, cluster: usize, class: usize) -> u64 {
        self.counts[cluster * self.classes + class]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `n_i`, points per predicted cluster.
    pub fn cluster_sizes(&self) -> Vec<u64> {
        (0..self.clusters)
            .map(|i| (0..self.classes).map(|j| self.get(i, j)).sum())
            .collect()
    }

    /// `n_j`, points per true class.
    pub fn class_sizes(&self) -> Vec<u64> {
        (0..self.classes)
            .map(|j| (0..self.clusters).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.classes.max(1)).map(<[u64]>::to_vec).collect()
    }
}

/// Cluster→class mapping maximizing the matched count. Rectangular tables
/// are zero-padded to square; clusters matched to a padding column map to
/// an index `>= classes`, i.e. to no real class.
pub fn align_labels(table: &ContingencyTable) -> Vec<usize> {
    let n = table.clusters.max(table.classes);
    let mut w = vec![0i64; n * n];
    for i in 0..table.clusters {
        for j in 0..table.classes {
            w[i * n + j] = table.get(i, j) as i64;
        }
    }
    let mut perm = max_weight_assignment(&w, n);
    perm.truncate(table.clusters);
    perm
}

fn nonempty(truth: &[usize], preds: &[usize]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one point".into()));
    }
    if truth.len() != preds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels vs {} predictions",
            truth.len(),
            preds.len()
        )));
    }
    Ok(())
}

/// Applies the accuracy-maximizing alignment to `preds`.
pub fn aligned_predictions(truth: &[usize], preds: &[usize]) -> Result<Vec<usize>> {
    nonempty(truth, preds)?;
    let table = ContingencyTable::from_labels(truth, preds)?;
    let map = align_labels(&table);
    Ok(preds.iter().map(|&p| map[p]).collect())
}

/// Clustering accuracy after optimal alignment.
pub fn accuracy(truth: &[usize], preds: &[usize]) -> Result<f64> {
    let aligned = aligned_predictions(truth, preds)?;
    let hits = truth.iter().zip(&aligned).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Unweighted mean of per-class F1 over every class appearing in either
/// `truth` or `aligned`. Classes without support score 0.
pub fn macro_f1(truth: &[usize], aligned: &[usize]) -> Result<f64> {
    nonempty(truth, aligned)?;
    let n = truth.iter().chain(aligned).max().map_or(0, |m| m + 1);
    let mut tp = vec![0u64; n];
    let mut support = vec![0u64; n];
    let mut predicted = vec![0u64; n];
    for (&t, &p) in truth.iter().zip(aligned) {
        support[t] += 1;
        predicted[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let mut sum = 0.0;
    let mut count = 0;
    for c in 0..n {
        if support[c] == 0 && predicted[c] == 0 {
            continue;
        }
        count += 1;
        if tp[c] > 0 {
            let prec = tp[c] as f64 / predicted[c] as f64;
            let rec = tp[c] as f64 / support[c] as f64;
            sum += 2.0 * prec * rec / (prec + rec);
        }
    }
    Ok(sum / count as f64)
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index by pair counting. Returns 0 when the normalizer
/// vanishes (e.g. both partitions trivial).
pub fn ari(table: &ContingencyTable) -> f64 {
    let n = table.total();
    if n < 2 {
        return 0.0;
    }
    let index: f64 = table.counts.iter().map(|&c| choose2(c)).sum();
    let a: f64 = table.cluster_sizes().into_iter().map(choose2).sum();
    let b: f64 = table.class_sizes().into_iter().map(choose2).sum();
    let expected = a * b / choose2(n);
    let max_index = 0.5 * (a + b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return 0.0;
    }
    (index - expected) / denom
}

/// Normalized mutual information `2·I(U;V) / (H(U) + H(V))` with
/// `0·log 0 = 0`. Returns 0 when both entropies vanish.
pub fn nmi(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ni = table.cluster_sizes();
    let nj = table.class_sizes();
    let mut mi = 0.0;
    for i in 0..table.clusters {
        for j in 0..table.classes {
            let c = table.get(i, j) as f64;
            if c > 0.0 {
                mi += c * (n * c / (ni[i] as f64 * nj[j] as f64)).ln();
            }
        }
    }
    let ent = |sizes: &[u64]| -> f64 {
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| -(s as f64) * (s as f64 / n).ln())
            .sum()
    };
    let denom = ent(&ni) + ent(&nj);
    if denom <= 0.0 {
        return 0.0;
    }
    (2.0 * mi / denom).clamp(0.0, 1.0)
}

/// All four scores for one partition pair. `classes`/`clusters` size the
/// contingency table.
pub fn score(truth: &[usize], preds: &[usize], classes: usize, clusters: usize) -> Result<Scores> {
    nonempty(truth, preds)?;
    let table = ContingencyTable::new(truth, preds, classes, clusters)?;
    let map = align_labels(&table);
    let aligned: Vec<usize> = preds.iter().map(|&p| map[p]).collect();
    let hits = truth.iter().zip(&aligned).filter(|(t, p)| t == p).count();
    Ok(Scores {
        acc: hits as f64 / truth.len() as f64,
        nmi: nmi(&table),
        ari: ari(&table),
        f1: macro_f1(truth, &aligned)?,
    })
}

/// Per-point prediction by majority vote over the windows covering each
/// point (ties to the smallest label). `starts` are window start offsets
/// into a stream of `n_points`; uncovered points get `None`.
pub fn pointwise_labels(
    window_preds: &[usize],
    starts: &[usize],
    window: usize,
    n_points: usize,
) -> Result<Vec<Option<usize>>> {
    if window_preds.len() != starts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} windows",
            window_preds.len(),
            starts.len()
        )));
    }
    if let Some(&s) = starts.iter().find(|&&s| s + window > n_points) {
        return Err(Error::InvalidArgument(format!(
            "window at {s} runs past {n_points} points"
        )));
    }
    let k = window_preds.iter().max().map_or(0, |m| m + 1);
    // one difference array per label
    let mut diff = vec![0i64; k * (n_points + 1)];
    for (&p, &s) in window_preds.iter().zip(starts) {
        diff[p * (n_points + 1) + s] += 1;
        diff[p * (n_points + 1) + s + window] -= 1;
    }
    let mut running = vec![0i64; k];
    let mut out = Vec::with_capacity(n_points);
    for t in 0..n_points {
        let mut best: Option<(usize, i64)> = None;
        for (l, r) in running.iter_mut().enumerate() {
            *r += diff[l * (n_points + 1) + t];
            if *r > 0 && best.is_none_or(|(_, c)| *r > c) {
                best = Some((l, *r));
            }
        }
        out.push(best.map(|(l, _)| l));
    }
    Ok(out)
}

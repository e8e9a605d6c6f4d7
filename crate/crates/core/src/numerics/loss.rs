use super::Tensor;
use crate::error::{Error, Result};

/// Weighted softmax cross-entropy, normalized by the total weight:
/// `Σ wᵢ·CEᵢ / Σ wᵢ`. Returns the loss and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &[usize], weights: &[f64]) -> Result<(f64, Tensor)> {
    let [b, k] = logits.shape() else {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("logits must be [batch, classes], got {:?}", logits.shape()),
        ));
    };
    let (b, k) = (*b, *k);
    if targets.len() != b || weights.len() != b {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("batch {b} but {} targets and {} weights", targets.len(), weights.len()),
        ));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= k) {
        return Err(Error::InvalidArgument(format!("target class {t} outside [0, {k})")));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument(
            "example weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all example weights are zero".into()));
    }
    let z = logits.data();
    let mut grad = vec![0.0; b * k];
    let mut loss = 0.0;
    for r in 0..b {
        let row = &z[r * k..(r + 1) * k];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_norm = max + sum_exp.ln();
        let w = weights[r] / total;
        loss += w * (log_norm - row[targets[r]]);
        let g = &mut grad[r * k..(r + 1) * k];
        for (gj, &zj) in g.iter_mut().zip(row) {
            *gj = w * (zj - log_norm).exp();
        }
        g[targets[r]] -= w;
    }
    Ok((loss, Tensor::new(vec![b, k], grad)?))
}

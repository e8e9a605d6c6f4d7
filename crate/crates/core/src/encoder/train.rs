use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ClassifierHead, Encoder};
use crate::error::{Error, Result};
use crate::numerics::{softmax_cross_entropy, AdamConfig, BnMode, Tensor};
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 256,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Weight-averaged loss of each epoch, measured during the epoch.
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
    pub examples: usize,
}

/// Weighted cross-entropy of encoder + head on one batch in train mode, with
/// gradients for both parameter sets. Updates batchnorm running statistics.
pub fn loss_and_grads(
    encoder: &mut Encoder,
    head: &ClassifierHead,
    x: &Tensor,
    targets: &[usize],
    weights: &[f64],
) -> Result<(f64, Vec<Tensor>, Vec<Tensor>)> {
    let (z, enc_cache) = encoder.forward(x, BnMode::Train)?;
    let (logits, head_cache) = head.forward(&z)?;
    let (loss, g_logits) = softmax_cross_entropy(&logits, targets, weights)?;
    let (head_grads, g_z) = head.backward(&head_cache, &g_logits)?;
    let enc_grads = encoder.backward(&enc_cache, &g_z)?;
    Ok((loss, enc_grads, head_grads))
}

/// Splits shuffled indices into batches; a trailing batch of one is merged
/// into its predecessor because train-mode batchnorm needs two rows.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size.max(2)).collect();
    if out.len() >= 2 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = (out.len() - 1) * size.max(2);
        *out.last_mut().unwrap() = &order[start..];
    }
    out
}

/// Weighted pseudo-label training of `encoder` and `head` with Adam.
/// `windows` is row-major `[n, C, 512]`; examples with weight 0 are never
/// placed in a batch.
pub fn pseudo_label_train(
    encoder: &mut Encoder,
    head: &mut ClassifierHead,
    windows: &[f64],
    labels: &[usize],
    weights: &[f64],
    cfg: &TrainConfig,
    seed: SeedStream,
) -> Result<TrainReport> {
    let ecfg = encoder.config().clone();
    let per = ecfg.channels * ecfg.window;
    let n = labels.len();
    if windows.len() != n * per || weights.len() != n {
        return Err(Error::shape(
            "pseudo_label_train",
            format!(
                "{} windows, {} labels, {} weights",
                windows.len() / per.max(1),
                n,
                weights.len()
            ),
        ));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "training weight {w} is not a non-negative number"
        )));
    }
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::Degenerate("no window has a positive training weight".into()));
    }
    let mut report = TrainReport {
        examples: active.len(),
        ..TrainReport::default()
    };
    let mut order = active;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut seed.index(epoch as u64).rng());
        let mut total = 0.0;
        let mut total_w = 0.0;
        for batch in batches(&order, cfg.batch_size) {
            let mut data = Vec::with_capacity(batch.len() * per);
            for &i in batch {
                data.extend_from_slice(&windows[i * per..(i + 1) * per]);
            }
            let x = Tensor::new(vec![batch.len(), ecfg.channels, ecfg.window], data)?;
            let t: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let w: Vec<f64> = batch.iter().map(|&i| weights[i]).collect();
            let (loss, eg, hg) = loss_and_grads(encoder, head, &x, &t, &w)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            encoder.params_mut().adam_step(&eg, &cfg.adam)?;
            head.params_mut().adam_step(&hg, &cfg.adam)?;
            let bw: f64 = w.iter().sum();
            total += loss * bw;
            total_w += bw;
            report.steps += 1;
        }
        report.epoch_loss.push(total / total_w);
    }
    Ok(report)
}

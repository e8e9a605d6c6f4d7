use super::Tensor;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Per-feature running mean and (unbiased) variance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    pub fn new(features: usize) -> Self {
        Self {
            mean: vec![0.0; features],
            var: vec![1.0; features],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    mode: BnMode,
    shape: Vec<usize>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// (rows, features, inner length) view of `[N, F]` or `[N, F, L]`.
fn layout(x: &Tensor) -> Result<(usize, usize, usize)> {
    match x.shape() {
        [n, f] => Ok((*n, *f, 1)),
        [n, f, l] => Ok((*n, *f, *l)),
        s => Err(Error::shape(
            "batchnorm",
            format!("input must be [N, F] or [N, F, L], got {s:?}"),
        )),
    }
}

/// Batch normalization over every axis except the feature axis (axis 1).
pub fn batchnorm_forward(
    input: &Tensor,
    scale: &Tensor,
    shift: &Tensor,
    mode: BnMode,
    stats: &mut RunningStats,
) -> Result<(Tensor, BatchNormCache)> {
    let (n, f, l) = layout(input)?;
    if scale.len() != f || shift.len() != f || stats.mean.len() != f {
        return Err(Error::shape(
            "batchnorm",
            format!(
                "feature dimension {f} != scale {} / shift {} / stats {}",
                scale.len(),
                shift.len(),
                stats.mean.len()
            ),
        ));
    }
    let x = input.data();
    let m = n * l;
    let (mean, inv_std) = match mode {
        BnMode::Train => {
            if n < 2 {
                return Err(Error::InvalidArgument(
                    "batchnorm in train mode needs a batch of at least 2".into(),
                ));
            }
            let mut mean = vec![0.0; f];
            let mut var = vec![0.0; f];
            for r in 0..n {
                for (j, mu) in mean.iter_mut().enumerate() {
                    let base = (r * f + j) * l;
                    *mu += x[base..base + l].iter().sum::<f64>();
                }
            }
            for mu in &mut mean {
                *mu /= m as f64;
            }
            for r in 0..n {
                for j in 0..f {
                    let base = (r * f + j) * l;
                    var[j] += x[base..base + l]
                        .iter()
                        .map(|v| (v - mean[j]) * (v - mean[j]))
                        .sum::<f64>();
                }
            }
            for v in &mut var {
                *v /= m as f64;
            }
            let unbias = if m > 1 { m as f64 / (m - 1) as f64 } else { 1.0 };
            for j in 0..f {
                stats.mean[j] = (1.0 - BN_MOMENTUM) * stats.mean[j] + BN_MOMENTUM * mean[j];
                stats.var[j] = (1.0 - BN_MOMENTUM) * stats.var[j] + BN_MOMENTUM * var[j] * unbias;
            }
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
            (mean, inv_std)
        }
        BnMode::Eval => (
            stats.mean.clone(),
            stats.var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect(),
        ),
    };
    let g = scale.data();
    let b = shift.data();
    let mut out = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    for r in 0..n {
        for j in 0..f {
            let base = (r * f + j) * l;
            for i in base..base + l {
                let h = (x[i] - mean[j]) * inv_std[j];
                xhat[i] = h;
                out[i] = g[j] * h + b[j];
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), out)?,
        BatchNormCache {
            mode,
            shape: input.shape().to_vec(),
            xhat,
            inv_std,
        },
    ))
}

/// Returns (grad_input, grad_scale, grad_shift).
pub fn batchnorm_backward(
    grad_out: &Tensor,
    cache: &BatchNormCache,
    scale: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    if grad_out.shape() != cache.shape.as_slice() {
        return Err(Error::shape(
            "batchnorm_backward",
            format!("grad_out {:?} != input {:?}", grad_out.shape(), cache.shape),
        ));
    }
    let (n, f, l) = layout(grad_out)?;
    let gy = grad_out.data();
    let xh = &cache.xhat;
    let mut gscale = vec![0.0; f];
    let mut gshift = vec![0.0; f];
    for r in 0..n {
        for j in 0..f {
            let base = (r * f + j) * l;
            for i in base..base + l {
                gshift[j] += gy[i];
                gscale[j] += gy[i] * xh[i];
            }
        }
    }
    let s = scale.data();
    let mut gx = vec![0.0; gy.len()];
    match cache.mode {
        BnMode::Train => {
            let m = (n * l) as f64;
            for r in 0..n {
                for j in 0..f {
                    let base = (r * f + j) * l;
                    let k = s[j] * cache.inv_std[j] / m;
                    for i in base..base + l {
                        gx[i] = k * (m * gy[i] - gshift[j] - xh[i] * gscale[j]);
                    }
                }
            }
        }
        BnMode::Eval => {
            for r in 0..n {
                for j in 0..f {
                    let base = (r * f + j) * l;
                    for i in base..base + l {
                        gx[i] = gy[i] * s[j] * cache.inv_std[j];
                    }
                }
            }
        }
    }
    Ok((
        Tensor::new(cache.shape.clone(), gx)?,
        Tensor::new(vec![f], gscale)?,
        Tensor::new(vec![f], gshift)?,
    ))
}

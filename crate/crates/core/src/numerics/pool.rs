use super::Tensor;
use crate::error::{Error, Result};

/// Flat argmax index (into the input) for every pooled output element.
#[derive(Debug, Clone)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

/// Non-overlapping max pooling over the last axis. Trailing elements that do
/// not fill a full window are dropped. Ties pick the first maximal index.
pub fn maxpool1d_forward(input: &Tensor, width: usize) -> Result<(Tensor, PoolIndices)> {
    if width == 0 {
        return Err(Error::InvalidArgument("pool width must be >= 1".into()));
    }
    if input.rank() == 0 {
        return Err(Error::shape("maxpool1d", "input must have rank >= 1"));
    }
    let len = *input.shape().last().unwrap();
    let rows = input.len() / len.max(1);
    let out_len = len / width;
    let x = input.data();
    let mut out = Vec::with_capacity(rows * out_len);
    let mut argmax = Vec::with_capacity(rows * out_len);
    for r in 0..rows {
        let row = &x[r * len..(r + 1) * len];
        for t in 0..out_len {
            let base = t * width;
            let mut best = base;
            for i in base + 1..base + width {
                if row[i] > row[best] {
                    best = i;
                }
            }
            out.push(row[best]);
            argmax.push(r * len + best);
        }
    }
    let mut shape = input.shape().to_vec();
    *shape.last_mut().unwrap() = out_len;
    Ok((
        Tensor::new(shape, out)?,
        PoolIndices {
            input_shape: input.shape().to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool1d_backward(grad_out: &Tensor, idx: &PoolIndices) -> Result<Tensor> {
    if grad_out.len() != idx.argmax.len() {
        return Err(Error::shape(
            "maxpool1d_backward",
            format!(
                "grad_out has {} values, pooling produced {}",
                grad_out.len(),
                idx.argmax.len()
            ),
        ));
    }
    let mut gx = Tensor::zeros(&idx.input_shape);
    let gd = gx.data_mut();
    for (&i, &g) in idx.argmax.iter().zip(grad_out.data()) {
        gd[i] += g;
    }
    Ok(gx)
}

use super::Tensor;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

fn check(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize)> {
    let [b, i] = input.shape() else {
        return Err(Error::shape(
            "dense",
            format!("input must be [batch, in], got {:?}", input.shape()),
        ));
    };
    let [o, wi] = weights.shape() else {
        return Err(Error::shape(
            "dense",
            format!("weights must be [out, in], got {:?}", weights.shape()),
        ));
    };
    if i != wi {
        return Err(Error::shape(
            "dense",
            format!("input features {i} != weight input features {wi}"),
        ));
    }
    if bias.len() != *o {
        return Err(Error::shape(
            "dense",
            format!("bias length {} != output features {o}", bias.len()),
        ));
    }
    Ok((*b, *i, *o))
}

/// Affine map `y = x·Wᵀ + b` with `W` stored as `[out, in]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (b, i, o) = check(input, weights, bias)?;
    let x = input.data();
    let w = weights.data();
    let bv = bias.data();
    let mut out = vec![0.0; b * o];
    par::for_each_chunk_mut(&mut out, o, |r, row| {
        let xr = &x[r * i..(r + 1) * i];
        for (k, y) in row.iter_mut().enumerate() {
            let wk = &w[k * i..(k + 1) * i];
            *y = bv[k] + xr.iter().zip(wk).map(|(a, c)| a * c).sum::<f64>();
        }
    });
    Tensor::new(vec![b, o], out)
}

pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
    let o = weights.dim(0);
    let (b, i, _) = check(input, weights, &Tensor::zeros(&[o]))?;
    if grad_out.shape() != [b, o] {
        return Err(Error::shape(
            "dense_backward",
            format!("grad_out {:?} != [{b}, {o}]", grad_out.shape()),
        ));
    }
    let x = input.data();
    let w = weights.data();
    let g = grad_out.data();

    let acc = par::blocked_sum(b, 32, o * i + o, |rows, acc| {
        let (gw, gb) = acc.split_at_mut(o * i);
        for r in rows {
            let xr = &x[r * i..(r + 1) * i];
            for k in 0..o {
                let gv = g[r * o + k];
                gb[k] += gv;
                if gv == 0.0 {
                    continue;
                }
                for (gwv, xv) in gw[k * i..(k + 1) * i].iter_mut().zip(xr) {
                    *gwv += gv * xv;
                }
            }
        }
    });

    let mut gx = vec![0.0; b * i];
    par::for_each_chunk_mut(&mut gx, i, |r, row| {
        for k in 0..o {
            let gv = g[r * o + k];
            if gv == 0.0 {
                continue;
            }
            for (xv, wv) in row.iter_mut().zip(&w[k * i..(k + 1) * i]) {
                *xv += gv * wv;
            }
        }
    });

    Ok(DenseGrads {
        input: Tensor::new(vec![b, i], gx)?,
        weights: Tensor::new(vec![o, i], acc[..o * i].to_vec())?,
        bias: Tensor::new(vec![o], acc[o * i..].to_vec())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map() {
        let x = Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, 7.0]).unwrap();
        let mut w = Tensor::zeros(&[3, 3]);
        for k in 0..3 {
            w.data_mut()[k * 3 + k] = 1.0;
        }
        let y = dense_forward(&x, &w, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn hand_example() {
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let w = Tensor::new(vec![3, 2], vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let y = dense_forward(&x, &w, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_mismatch() {
        let x = Tensor::zeros(&[1, 4]);
        let w = Tensor::zeros(&[3, 2]);
        assert!(dense_forward(&x, &w, &Tensor::zeros(&[3])).is_err());
    }
}

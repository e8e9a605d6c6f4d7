use super::Tensor;
use crate::error::{Error, Result};
use crate::par;

/// Output length of a valid (unpadded) convolution.
pub fn conv_out_len(length: usize, filter_len: usize, stride: usize) -> usize {
    if length < filter_len || stride == 0 {
        0
    } else {
        (length - filter_len) / stride + 1
    }
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Option<Tensor>,
    pub filters: Tensor,
    pub bias: Tensor,
}

struct Dims {
    batch: usize,
    in_ch: usize,
    len: usize,
    out_ch: usize,
    filter_len: usize,
    out_len: usize,
}

fn dims(input: &Tensor, filters: &Tensor, bias: &Tensor, stride: usize) -> Result<Dims> {
    let (batch, in_ch, len) = match input.shape() {
        [b, l] => (*b, 1, *l),
        [b, c, l] => (*b, *c, *l),
        s => {
            return Err(Error::shape(
                "conv1d",
                format!("input must be [batch, length] or [batch, channels, length], got {s:?}"),
            ))
        }
    };
    let (out_ch, f_in, filter_len) = match filters.shape() {
        [o, f] => (*o, 1, *f),
        [o, c, f] => (*o, *c, *f),
        s => {
            return Err(Error::shape(
                "conv1d",
                format!("filters must be [out, len] or [out, in, len], got {s:?}"),
            ))
        }
    };
    if f_in != in_ch {
        return Err(Error::shape(
            "conv1d",
            format!("input channels {in_ch} != filter input channels {f_in}"),
        ));
    }
    if bias.len() != out_ch {
        return Err(Error::shape(
            "conv1d",
            format!("bias length {} != output channels {out_ch}", bias.len()),
        ));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("conv1d stride must be >= 1".into()));
    }
    if len < filter_len {
        return Err(Error::shape(
            "conv1d",
            format!("input length {len} shorter than filter length {filter_len}"),
        ));
    }
    Ok(Dims {
        batch,
        in_ch,
        len,
        out_ch,
        filter_len,
        out_len: conv_out_len(len, filter_len, stride),
    })
}

/// Valid 1D cross-correlation. Returns `[batch, out_ch, out_len]`.
pub fn conv1d_forward(input: &Tensor, filters: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    let d = dims(input, filters, bias, stride)?;
    let x = input.data();
    let w = filters.data();
    let b = bias.data();
    let mut out = vec![0.0; d.batch * d.out_ch * d.out_len];
    par::for_each_chunk_mut(&mut out, d.out_ch * d.out_len, |n, chunk| {
        let xn = &x[n * d.in_ch * d.len..(n + 1) * d.in_ch * d.len];
        for o in 0..d.out_ch {
            let row = &mut chunk[o * d.out_len..(o + 1) * d.out_len];
            row.fill(b[o]);
            for c in 0..d.in_ch {
                let wk = &w[(o * d.in_ch + c) * d.filter_len..(o * d.in_ch + c + 1) * d.filter_len];
                let xc = &xn[c * d.len..(c + 1) * d.len];
                for (t, r) in row.iter_mut().enumerate() {
                    let seg = &xc[t * stride..t * stride + d.filter_len];
                    *r += seg.iter().zip(wk).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    });
    Tensor::new(vec![d.batch, d.out_ch, d.out_len], out)
}

/// Backward pass of [`conv1d_forward`]. The input gradient is skipped when
/// `need_input_grad` is false (first layer).
pub fn conv1d_backward(
    input: &Tensor,
    filters: &Tensor,
    stride: usize,
    grad_out: &Tensor,
    need_input_grad: bool,
) -> Result<ConvGrads> {
    let out_ch = filters.dim(0);
    let zero_bias = Tensor::zeros(&[out_ch]);
    let d = dims(input, filters, &zero_bias, stride)?;
    if grad_out.shape() != [d.batch, d.out_ch, d.out_len] {
        return Err(Error::shape(
            "conv1d_backward",
            format!(
                "grad_out {:?} != [{}, {}, {}]",
                grad_out.shape(),
                d.batch,
                d.out_ch,
                d.out_len
            ),
        ));
    }
    let x = input.data();
    let w = filters.data();
    let g = grad_out.data();
    let wlen = d.out_ch * d.in_ch * d.filter_len;

    // filters and bias packed in one accumulator: [wlen | out_ch]
    let acc = par::blocked_sum(d.batch, 16, wlen + d.out_ch, |rows, acc| {
        let (gw, gb) = acc.split_at_mut(wlen);
        for n in rows {
            let xn = &x[n * d.in_ch * d.len..(n + 1) * d.in_ch * d.len];
            let gn = &g[n * d.out_ch * d.out_len..(n + 1) * d.out_ch * d.out_len];
            for o in 0..d.out_ch {
                let go = &gn[o * d.out_len..(o + 1) * d.out_len];
                gb[o] += go.iter().sum::<f64>();
                for c in 0..d.in_ch {
                    let xc = &xn[c * d.len..(c + 1) * d.len];
                    let gwk = &mut gw[(o * d.in_ch + c) * d.filter_len..(o * d.in_ch + c + 1) * d.filter_len];
                    for (t, &gv) in go.iter().enumerate() {
                        if gv == 0.0 {
                            continue;
                        }
                        let seg = &xc[t * stride..t * stride + d.filter_len];
                        for (gk, xv) in gwk.iter_mut().zip(seg) {
                            *gk += gv * xv;
                        }
                    }
                }
            }
        }
    });
    let grad_filters = Tensor::new(filters.shape().to_vec(), acc[..wlen].to_vec())?;
    let grad_bias = Tensor::new(vec![d.out_ch], acc[wlen..].to_vec())?;

    let grad_input = if need_input_grad {
        let mut gx = vec![0.0; d.batch * d.in_ch * d.len];
        par::for_each_chunk_mut(&mut gx, d.in_ch * d.len, |n, gxn| {
            let gn = &g[n * d.out_ch * d.out_len..(n + 1) * d.out_ch * d.out_len];
            for o in 0..d.out_ch {
                let go = &gn[o * d.out_len..(o + 1) * d.out_len];
                for c in 0..d.in_ch {
                    let wk = &w[(o * d.in_ch + c) * d.filter_len..(o * d.in_ch + c + 1) * d.filter_len];
                    let gxc = &mut gxn[c * d.len..(c + 1) * d.len];
                    for (t, &gv) in go.iter().enumerate() {
                        if gv == 0.0 {
                            continue;
                        }
                        let seg = &mut gxc[t * stride..t * stride + d.filter_len];
                        for (s, wv) in seg.iter_mut().zip(wk) {
                            *s += gv * wv;
                        }
                    }
                }
            }
        });
        Some(Tensor::new(input.shape().to_vec(), gx)?)
    } else {
        None
    };

    Ok(ConvGrads {
        input: grad_input,
        filters: grad_filters,
        bias: grad_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_len_formula() {
        assert_eq!(conv_out_len(512, 50, 2), 232);
        assert_eq!(conv_out_len(116, 40, 2), 39);
        assert_eq!(conv_out_len(19, 7, 1), 13);
        assert_eq!(conv_out_len(6, 4, 1), 3);
    }

    #[test]
    fn hand_computed_example() {
        let x = Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let w = Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap();
        let b = Tensor::zeros(&[1]);
        let y = conv1d_forward(&x, &w, &b, 1).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2]);
        assert_eq!(y.data(), &[3.0, 5.0]);
    }

    #[test]
    fn shape_errors_name_the_dimension() {
        let x = Tensor::zeros(&[2, 3, 10]);
        let w = Tensor::zeros(&[4, 2, 3]);
        let err = conv1d_forward(&x, &w, &Tensor::zeros(&[4]), 1).unwrap_err();
        assert!(err.to_string().contains("channels"), "{err}");

        let w = Tensor::zeros(&[4, 3, 11]);
        let err = conv1d_forward(&x, &w, &Tensor::zeros(&[4]), 1).unwrap_err();
        assert!(err.to_string().contains("length"), "{err}");

        let w = Tensor::zeros(&[4, 3, 2]);
        let err = conv1d_forward(&x, &w, &Tensor::zeros(&[3]), 1).unwrap_err();
        assert!(err.to_string().contains("bias"), "{err}");
    }

    #[test]
    fn out_len_exhaustive() {
        for l in 1..64 {
            for f in 1..=l {
                for s in 1..8 {
                    let x = Tensor::zeros(&[1, l]);
                    let w = Tensor::zeros(&[1, f]);
                    let y = conv1d_forward(&x, &w, &Tensor::zeros(&[1]), s).unwrap();
                    assert_eq!(y.dim(2), (l - f) / s + 1);
                }
            }
        }
    }
}

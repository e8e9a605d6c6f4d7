//! Finite-difference gradient checks. Each returns the worst relative error
//! over `trials` random instances.

use actcluster::encoder::{ClassifierHead, Encoder, EncoderConfig};
use actcluster::numerics::*;
use actcluster::seed::{Rng, SeedStream};
use rand::Rng as _;

use super::{fd_grad, rel_err};

pub const H: f64 = 1e-5;

fn randn(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn t(shape: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn conv(trials: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = SeedStream::new(seed).index(trial as u64).rng();
        let b = rng.gen_range(1..3);
        let cin = rng.gen_range(1..4);
        let f = rng.gen_range(1..6);
        let stride = rng.gen_range(1..4);
        let len = f + rng.gen_range(0..12);
        let out_ch = rng.gen_range(1..4);
        let x = randn(&mut rng, b * cin * len);
        let w = randn(&mut rng, out_ch * cin * f);
        let bias = randn(&mut rng, out_ch);
        let lout = conv_out_len(len, f, stride);
        let r = randn(&mut rng, b * out_ch * lout);
        let (xs, ws) = ([b, cin, len], [out_ch, cin, f]);
        let loss = |x: &[f64], w: &[f64], bb: &[f64]| {
            let y = conv1d_forward(
                &t(&xs, x.to_vec()),
                &t(&ws, w.to_vec()),
                &t(&[out_ch], bb.to_vec()),
                stride,
            )
            .unwrap();
            dot(y.data(), &r)
        };
        let g = conv1d_backward(
            &t(&xs, x.clone()),
            &t(&ws, w.clone()),
            stride,
            &t(&[b, out_ch, lout], r.clone()),
            true,
        )
        .unwrap();
        let nx = fd_grad(|v| loss(v, &w, &bias), &x, &all(x.len()), H);
        let nw = fd_grad(|v| loss(&x, v, &bias), &w, &all(w.len()), H);
        let nb = fd_grad(|v| loss(&x, &w, v), &bias, &all(bias.len()), H);
        worst = worst
            .max(rel_err(g.input.unwrap().data(), &nx))
            .max(rel_err(g.filters.data(), &nw))
            .max(rel_err(g.bias.data(), &nb));
    }
    worst
}

pub fn pool(trials: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = SeedStream::new(seed).index(trial as u64).rng();
        let rows = rng.gen_range(1..4);
        let len = rng.gen_range(2..20);
        let width = rng.gen_range(1..4).min(len);
        let x = randn(&mut rng, rows * len);
        let shape = [rows, len];
        let (y, idx) = maxpool1d_forward(&t(&shape, x.clone()), width).unwrap();
        let r = randn(&mut rng, y.len());
        let g = maxpool1d_backward(&t(y.shape(), r.clone()), &idx).unwrap();
        let n = fd_grad(
            |v| dot(maxpool1d_forward(&t(&shape, v.to_vec()), width).unwrap().0.data(), &r),
            &x,
            &all(x.len()),
            H,
        );
        worst = worst.max(rel_err(g.data(), &n));
    }
    worst
}

pub fn batchnorm(trials: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = SeedStream::new(seed).index(trial as u64).rng();
        let n = rng.gen_range(2..6);
        let f = rng.gen_range(1..4);
        let l = rng.gen_range(1..5);
        let shape = [n, f, l];
        let x = randn(&mut rng, n * f * l);
        let scale: Vec<f64> = (0..f).map(|_| rng.gen_range(0.5..1.5)).collect();
        let shift = randn(&mut rng, f);
        let r = randn(&mut rng, x.len());
        let loss = |x: &[f64], s: &[f64], b: &[f64]| {
            let mut st = RunningStats::new(f);
            let (y, _) = batchnorm_forward(
                &t(&shape, x.to_vec()),
                &t(&[f], s.to_vec()),
                &t(&[f], b.to_vec()),
                BnMode::Train,
                &mut st,
            )
            .unwrap();
            dot(y.data(), &r)
        };
        let mut st = RunningStats::new(f);
        let (_, cache) = batchnorm_forward(
            &t(&shape, x.clone()),
            &t(&[f], scale.clone()),
            &t(&[f], shift.clone()),
            BnMode::Train,
            &mut st,
        )
        .unwrap();
        let (gx, gs, gb) = batchnorm_backward(&t(&shape, r.clone()), &cache, &t(&[f], scale.clone())).unwrap();
        let nx = fd_grad(|v| loss(v, &scale, &shift), &x, &all(x.len()), H);
        let ns = fd_grad(|v| loss(&x, v, &shift), &scale, &all(f), H);
        let nb = fd_grad(|v| loss(&x, &scale, v), &shift, &all(f), H);
        worst = worst
            .max(rel_err(gx.data(), &nx))
            .max(rel_err(gs.data(), &ns))
            .max(rel_err(gb.data(), &nb));
    }
    worst
}

pub fn dense(trials: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = SeedStream::new(seed).index(trial as u64).rng();
        let (b, i, o) = (rng.gen_range(1..4), rng.gen_range(1..6), rng.gen_range(1..6));
        let x = randn(&mut rng, b * i);
        let w = randn(&mut rng, o * i);
        let bias = randn(&mut rng, o);
        let r = randn(&mut rng, b * o);
        let loss = |x: &[f64], w: &[f64], bb: &[f64]| {
            dot(
                dense_forward(&t(&[b, i], x.to_vec()), &t(&[o, i], w.to_vec()), &t(&[o], bb.to_vec()))
                    .unwrap()
                    .data(),
                &r,
            )
        };
        let g = dense_backward(&t(&[b, i], x.clone()), &t(&[o, i], w.clone()), &t(&[b, o], r.clone())).unwrap();
        let nx = fd_grad(|v| loss(v, &w, &bias), &x, &all(x.len()), H);
        let nw = fd_grad(|v| loss(&x, v, &bias), &w, &all(w.len()), H);
        let nb = fd_grad(|v| loss(&x, &w, v), &bias, &all(o), H);
        worst = worst
            .max(rel_err(g.input.data(), &nx))
            .max(rel_err(g.weights.data(), &nw))
            .max(rel_err(g.bias.data(), &nb));
    }
    worst
}

pub fn relu(trials: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = SeedStream::new(seed).index(trial as u64).rng();
        let n = rng.gen_range(1..20);
        let x = randn(&mut rng, n);
        let r = randn(&mut rng, n);
        let g = relu_backward(&Tensor::from_vec(x.clone()), &Tensor::from_vec(r.clone()));
        let nx = fd_grad(
            |v| dot(relu_forward(&Tensor::from_vec(v.to_vec())).data(), &r),
            &x,
            &all(n),
            H,
        );
        worst = worst.max(rel_err(g.data(), &nx));
    }
    worst
}

pub fn cross_entropy(trials: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = SeedStream::new(seed).index(trial as u64).rng();
        let (b, k) = (rng.gen_range(1..5), rng.gen_range(2..6));
        let logits: Vec<f64> = (0..b * k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..k)).collect();
        let weights: Vec<f64> = (0..b).map(|_| [0.5, 1.0, 2.0][rng.gen_range(0..3)]).collect();
        let (_, g) = softmax_cross_entropy(&t(&[b, k], logits.clone()), &targets, &weights).unwrap();
        let n = fd_grad(
            |v| {
                softmax_cross_entropy(&t(&[b, k], v.to_vec()), &targets, &weights)
                    .unwrap()
                    .0
            },
            &logits,
            &all(b * k),
            H,
        );
        worst = worst.max(rel_err(g.data(), &n));
    }
    worst
}

/// Encoder + head + weighted cross-entropy on a 2-window batch, checked on
/// `coords` randomly chosen parameters per trial.
pub fn end_to_end(trials: usize, coords: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let s = SeedStream::new(seed).index(trial as u64);
        let mut rng = s.child("data").rng();
        let channels = rng.gen_range(1..3);
        let k = rng.gen_range(2..4);
        let mut cfg = EncoderConfig::new(channels);
        cfg.projector = trial % 5 == 4;
        let enc = Encoder::new(cfg.clone(), s.child("enc")).unwrap();
        let head = ClassifierHead::new(cfg.output_dim(), k, s.child("head"));
        let x = t(&[2, channels, 512], randn(&mut rng, 2 * channels * 512));
        let targets = vec![rng.gen_range(0..k), rng.gen_range(0..k)];
        let weights = vec![1.0, 2.0];

        let loss = |enc: &Encoder, head: &ClassifierHead| {
            let mut e = enc.clone();
            let (z, _) = e.forward(&x, BnMode::Train).unwrap();
            let (logits, _) = head.forward(&z).unwrap();
            softmax_cross_entropy(&logits, &targets, &weights).unwrap().0
        };
        let mut e0 = enc.clone();
        let (_, eg, hg) = actcluster::encoder::loss_and_grads(&mut e0, &head, &x, &targets, &weights).unwrap();

        let n_enc = enc.params().len();
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for _ in 0..coords {
            let p = rng.gen_range(0..n_enc + head.params().len());
            if p < n_enc {
                let id = enc.params().ids().nth(p).unwrap();
                let j = rng.gen_range(0..enc.params().get(id).len());
                analytic.push(eg[p].data()[j]);
                let num = fd_grad(
                    |v| {
                        let mut e = enc.clone();
                        e.params_mut().get_mut(id).data_mut()[j] = v[0];
                        loss(&e, &head)
                    },
                    &[enc.params().get(id).data()[j]],
                    &[0],
                    H,
                );
                numeric.push(num[0]);
            } else {
                let q = p - n_enc;
                let id = head.params().ids().nth(q).unwrap();
                let j = rng.gen_range(0..head.params().get(id).len());
                analytic.push(hg[q].data()[j]);
                let num = fd_grad(
                    |v| {
                        let mut h = head.clone();
                        h.params_mut().get_mut(id).data_mut()[j] = v[0];
                        loss(&enc, &h)
                    },
                    &[head.params().get(id).data()[j]],
                    &[0],
                    H,
                );
                numeric.push(num[0]);
            }
        }
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    worst
}

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::curve::fit_ab;
use super::graph::FuzzyGraph;
use super::UmapConfig;
use crate::error::Result;
use crate::seed::SeedStream;

const CLIP: f64 = 4.0;
const SPECTRAL_ITERS: usize = 300;

fn clip(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-CLIP, CLIP)
    }
}

/// Leading non-trivial eigenvectors of the normalized adjacency
/// `D^-1/2 W D^-1/2` (equivalently the smallest of the normalized
/// Laplacian) by deflated orthogonal iteration. Returns `[n, dim]` or
/// `None` if the iteration breaks down.
pub fn spectral_init(graph: &FuzzyGraph, dim: usize, seed: SeedStream) -> Option<Vec<f64>> {
    let n = graph.n;
    if n <= dim + 1 {
        return None;
    }
    let deg: Vec<f64> = (0..n).map(|i| graph.row(i).map(|(_, v)| v).sum()).collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut trivial: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    let tn = trivial.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(tn > 0.0) {
        return None;
    }
    trivial.iter_mut().for_each(|v| *v /= tn);

    // shifted operator (M + I)/2 has spectrum in [0, 1]
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            let mut s = 0.0;
            for (j, w) in graph.row(i) {
                s += w * inv_sqrt[j] * x[j];
            }
            y[i] = 0.5 * (inv_sqrt[i] * s + x[i]);
        }
    };
    let orthonormalize = |vecs: &mut [Vec<f64>]| -> bool {
        for a in 0..vecs.len() {
            let (done, rest) = vecs.split_at_mut(a);
            let v = &mut rest[0];
            let p: f64 = v.iter().zip(&trivial).map(|(x, t)| x * t).sum();
            v.iter_mut().zip(&trivial).for_each(|(x, t)| *x -= p * t);
            for u in done.iter() {
                let p: f64 = v.iter().zip(u).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
            }
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(nrm > 1e-300) || !nrm.is_finite() {
                return false;
            }
            v.iter_mut().for_each(|x| *x /= nrm);
        }
        true
    };

    let mut rng = seed.rng();
    let mut vecs: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    if !orthonormalize(&mut vecs) {
        return None;
    }
    let mut tmp = vec![0.0; n];
    for _ in 0..SPECTRAL_ITERS {
        for v in vecs.iter_mut() {
            apply(v, &mut tmp);
            v.copy_from_slice(&tmp);
        }
        if !orthonormalize(&mut vecs) {
            return None;
        }
    }
    let mut out = vec![0.0; n * dim];
    for (c, v) in vecs.iter().enumerate() {
        for i in 0..n {
            out[i * dim + c] = v[i];
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn initial_embedding(graph: &FuzzyGraph, dim: usize, seed: SeedStream) -> Vec<f64> {
    let n = graph.n;
    let mut rng = seed.child("noise").rng();
    let mut emb = match spectral_init(graph, dim, seed.child("spectral")) {
        Some(init) => {
            let max = init.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let noise = Normal::new(0.0, 1e-4).unwrap();
            let expansion = if max > 0.0 { 10.0 / max } else { 1.0 };
            init.iter().map(|v| v * expansion + noise.sample(&mut rng)).collect()
        }
        None => {
            log::debug!("spectral initialization failed; using random layout");
            (0..n * dim).map(|_| rng.gen_range(-10.0..10.0)).collect::<Vec<f64>>()
        }
    };
    // rescale every axis to [0, 10]
    for c in 0..dim {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(emb[i * dim + c]), hi.max(emb[i * dim + c]))
        });
        if hi > lo {
            for i in 0..n {
                emb[i * dim + c] = 10.0 * (emb[i * dim + c] - lo) / (hi - lo);
            }
        }
    }
    emb
}

/// Stochastic layout optimization with edge sampling proportional to
/// membership strength and uniform negative sampling. Updates are applied
/// sequentially, so the result is a pure function of the seed.
pub fn optimize_layout(graph: &FuzzyGraph, cfg: &UmapConfig, seed: SeedStream) -> Result<Vec<f64>> {
    let n = graph.n;
    let dim = cfg.n_components;
    let mut emb = initial_embedding(graph, dim, seed.child("init"));
    let (a, b) = fit_ab(cfg.spread, cfg.min_dist);

    let max_w = graph.vals.iter().cloned().fold(0.0, f64::max);
    let n_epochs = cfg.n_epochs.max(1);
    let mut heads = Vec::new();
    let mut tails = Vec::new();
    let mut eps = Vec::new();
    for i in 0..n {
        for (j, w) in graph.row(i) {
            if w >= max_w / n_epochs as f64 {
                heads.push(i);
                tails.push(j);
                eps.push(max_w / w);
            }
        }
    }
    let neg_rate = cfg.negative_sample_rate.max(1) as f64;
    let eps_neg: Vec<f64> = eps.iter().map(|e| e / neg_rate).collect();
    let mut next_sample = eps.clone();
    let mut next_neg = eps_neg.clone();

    let mut rng = seed.child("sgd").rng();
    let mut alpha = cfg.learning_rate;
    let mut cur = vec![0.0; dim];
    for epoch in 0..n_epochs {
        let e_f = epoch as f64;
        for e in 0..heads.len() {
            if next_sample[e] > e_f {
                continue;
            }
            let (j, k) = (heads[e], tails[e]);
            let mut dist_sq = 0.0;
            for c in 0..dim {
                let diff = emb[j * dim + c] - emb[k * dim + c];
                dist_sq += diff * diff;
            }
            let coeff = if dist_sq > 0.0 {
                -2.0 * a * b * dist_sq.powf(b - 1.0) / (a * dist_sq.powf(b) + 1.0)
            } else {
                0.0
            };
            for c in 0..dim {
                let g = clip(coeff * (emb[j * dim + c] - emb[k * dim + c]));
                emb[j * dim + c] += g * alpha;
                emb[k * dim + c] -= g * alpha;
            }
            next_sample[e] += eps[e];

            let n_neg = ((e_f - next_neg[e]) / eps_neg[e]).floor().max(0.0) as usize;
            cur.copy_from_slice(&emb[j * dim..(j + 1) * dim]);
            for _ in 0..n_neg {
                let other = rng.gen_range(0..n);
                let mut dist_sq = 0.0;
                for c in 0..dim {
                    let diff = cur[c] - emb[other * dim + c];
                    dist_sq += diff * diff;
                }
                let coeff = if dist_sq > 0.0 {
                    2.0 * b / ((0.001 + dist_sq) * (a * dist_sq.powf(b) + 1.0))
                } else if other == j {
                    continue;
                } else {
                    0.0
                };
                for c in 0..dim {
                    let g = if coeff > 0.0 {
                        clip(coeff * (cur[c] - emb[other * dim + c]))
                    } else {
                        CLIP
                    };
                    cur[c] += g * alpha;
                }
            }
            emb[j * dim..(j + 1) * dim].copy_from_slice(&cur);
            next_neg[e] += n_neg as f64 * eps_neg[e];
        }
        alpha = cfg.learning_rate * (1.0 - (epoch + 1) as f64 / n_epochs as f64);
    }
    Ok(emb)
}

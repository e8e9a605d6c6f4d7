//! Brute-force oracles and finite-difference helpers shared by the
//! integration tests.
#![allow(dead_code)]

pub mod checks;

use std::collections::HashMap;

use proptest::test_runner::Config as ProptestConfig;

use actcluster::data::{generate_synthetic, Dataset, SynthConfig};

/// Central finite difference of `f` along each coordinate in `coords`.
pub fn fd_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], coords: &[usize], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    coords
        .iter()
        .map(|&i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let up = f(&xp);
            xp[i] = orig - h;
            let down = f(&xp);
            xp[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-14 {
        diff
    } else {
        diff / scale
    }
}

/// ARI straight from its definition over all O(n²) point pairs.
pub fn ari_pairs(truth: &[usize], preds: &[usize]) -> f64 {
    let n = truth.len();
    let (mut both, mut same_t, mut same_p) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let t = truth[i] == truth[j];
            let p = preds[i] == preds[j];
            same_t += t as u8 as f64;
            same_p += p as u8 as f64;
            both += (t && p) as u8 as f64;
        }
    }
    let pairs = (n * (n.saturating_sub(1))) as f64 / 2.0;
    if pairs == 0.0 {
        return 0.0;
    }
    let expected = same_t * same_p / pairs;
    let max = 0.5 * (same_t + same_p);
    if max - expected == 0.0 {
        return 0.0;
    }
    (both - expected) / (max - expected)
}

/// NMI from probabilities: `2 I(U;V) / (H(U) + H(V))`.
pub fn nmi_entropy(truth: &[usize], preds: &[usize]) -> f64 {
    let n = truth.len() as f64;
    let mut cu: HashMap<usize, u64> = HashMap::new();
    let mut cv: HashMap<usize, u64> = HashMap::new();
    let mut cuv: HashMap<(usize, usize), u64> = HashMap::new();
    for (&t, &p) in truth.iter().zip(preds) {
        *cu.entry(p).or_default() += 1;
        *cv.entry(t).or_default() += 1;
        *cuv.entry((p, t)).or_default() += 1;
    }
    let h = |m: &HashMap<usize, u64>| -> f64 { m.values().map(|&c| c as f64 / n).map(|p| -p * p.ln()).sum() };
    let mut mi = 0.0;
    for (&(u, v), &c) in &cuv {
        let p = c as f64 / n;
        mi += p * (p / (cu[&u] as f64 / n * (cv[&v] as f64 / n))).ln();
    }
    if cu.len() == 1 && cv.len() == 1 {
        return 0.0;
    }
    (2.0 * mi / (h(&cu) + h(&cv))).clamp(0.0, 1.0)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over every relabeling of the predicted clusters.
pub fn acc_bruteforce(truth: &[usize], preds: &[usize]) -> f64 {
    let m = truth.iter().chain(preds).max().map_or(0, |m| m + 1);
    let mut best = 0;
    for perm in permutations(m) {
        let hits = truth.iter().zip(preds).filter(|(&t, &p)| perm[p] == t).count();
        best = best.max(hits);
    }
    best as f64 / truth.len() as f64
}

/// Posteriors `[T, K]` and log-likelihood by enumerating all `K^T` paths.
pub fn hmm_enumerate(log_emit: &[f64], k: usize, trans: &[f64], init: &[f64]) -> (Vec<f64>, f64) {
    let t_len = log_emit.len() / k;
    let mut post = vec![0.0; t_len * k];
    let mut total = 0.0;
    let paths = k.pow(t_len as u32);
    let mut path = vec![0usize; t_len];
    for code in 0..paths {
        let mut c = code;
        for s in path.iter_mut() {
            *s = c % k;
            c /= k;
        }
        let mut lp = init[path[0]].ln() + log_emit[path[0]];
        for t in 1..t_len {
            lp += trans[path[t - 1] * k + path[t]].ln() + log_emit[t * k + path[t]];
        }
        let p = lp.exp();
        total += p;
        for t in 0..t_len {
            post[t * k + path[t]] += p;
        }
    }
    post.iter_mut().for_each(|v| *v /= total);
    (post, total.ln())
}

/// Three frequency-coded activities, two subjects, ~204 step-5 windows per
/// subject.
pub fn recovery_data(seed: u64, offset_scale: f64) -> Dataset {
    generate_synthetic(&SynthConfig {
        bout_len: 680,
        subject_offset_scale: offset_scale,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One hand-worked mask iteration: inputs and the expected `M_j`, `S_j`
/// and loss weights.
pub struct MaskStep {
    pub labels: Vec<usize>,
    pub confidence: Vec<f64>,
    pub mask: Vec<usize>,
    pub semi: Vec<usize>,
    pub weights: Vec<f64>,
    pub algorithm1_weights: Vec<f64>,
}

/// Five windows over four iterations at threshold 0.95.
/// Window 0 is always stable; window 1 starts unconfident; window 2 flips
/// at iteration 3 and is stable again at 4; window 3 flips at iteration 2;
/// window 4 loses confidence at 3 and flips at 4.
pub fn mask_worked_example() -> Vec<MaskStep> {
    let step =
        |labels: [usize; 5], confidence: [f64; 5], mask: &[usize], semi: &[usize], w: [f64; 5], a: [f64; 5]| MaskStep {
            labels: labels.to_vec(),
            confidence: confidence.to_vec(),
            mask: mask.to_vec(),
            semi: semi.to_vec(),
            weights: w.to_vec(),
            algorithm1_weights: a.to_vec(),
        };
    vec![
        step(
            [0, 1, 2, 0, 1],
            [0.99, 0.80, 0.99, 0.99, 0.99],
            &[0, 2, 3, 4],
            &[0, 2, 3, 4],
            [2.0, 0.0, 2.0, 2.0, 2.0],
            [1.0, 0.0, 1.0, 1.0, 1.0],
        ),
        step(
            [0, 1, 2, 1, 1],
            [0.99; 5],
            &[0, 1, 2, 4],
            &[0, 1, 2, 4],
            [2.0, 2.0, 2.0, 0.0, 2.0],
            [1.0, 1.0, 1.0, 0.0, 1.0],
        ),
        step(
            [0, 1, 0, 1, 1],
            [0.99, 0.99, 0.99, 0.99, 0.90],
            &[0, 1, 3],
            &[0, 1],
            [2.0, 2.0, 0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.5, 0.0],
        ),
        step(
            [0, 1, 0, 1, 2],
            [0.99; 5],
            &[0, 1, 2, 3],
            &[0, 1],
            [2.0, 2.0, 1.0, 1.0, 0.0],
            [1.0, 1.0, 0.5, 0.5, 0.0],
        ),
    ]
}

pub fn members(flags: &[bool]) -> Vec<usize> {
    flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
}

/// Proptest settings without on-disk regression files, which proptest cannot
/// place for integration test targets.
pub fn prop_config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::gaussian::Gaussian;
use super::gmm::{gmm_fit, GmmConfig, GmmModel};
use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::SeedStream;

/// How the self-transition probability `p` maps onto the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionSemantics {
    /// Diagonal = `p`.
    #[default]
    #[serde(rename = "self")]
    SelfProb,
    /// Diagonal = `1 - p`, off-diagonal = `p / (K - 1)`.
    Complement,
}

const P_CLAMP: f64 = 1e-6;

/// Fraction of consecutive label pairs (within each chain) that repeat.
pub fn estimate_self_transition(labels: &[usize], chains: &[Range<usize>]) -> Result<f64> {
    let mut pairs = 0usize;
    let mut same = 0usize;
    for c in chains {
        for i in c.start + 1..c.end {
            pairs += 1;
            if labels[i] == labels[i - 1] {
                same += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::InvalidArgument(
            "cannot estimate self-transition from fewer than two consecutive labels".into(),
        ));
    }
    Ok(same as f64 / pairs as f64)
}

/// Constant-diagonal transition matrix, row-major `[k, k]`. `p` is clamped
/// into `[1e-6, 1 - 1e-6]`. Rows sum to 1 up to rounding.
pub fn build_transitions(k: usize, p: f64, semantics: TransitionSemantics) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("transitions need K >= 2, got {k}")));
    }
    if !p.is_finite() {
        return Err(Error::InvalidArgument(
            "self-transition probability is not finite".into(),
        ));
    }
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    let diag = match semantics {
        TransitionSemantics::SelfProb => p,
        TransitionSemantics::Complement => 1.0 - p,
    };
    let off = (1.0 - diag) / (k - 1) as f64;
    let d = 1.0 - off * (k - 1) as f64;
    let mut a = vec![off; k * k];
    for i in 0..k {
        a[i * k + i] = d;
    }
    Ok(a)
}

/// Scaled forward–backward over one sequence. `log_emit` is `[t, k]`,
/// `trans` is `[k, k]`, `init` has length `k`. Returns posteriors `[t, k]`
/// and the sequence log-likelihood.
pub fn forward_backward(log_emit: &[f64], k: usize, trans: &[f64], init: &[f64]) -> (Vec<f64>, f64) {
    let t_len = log_emit.len() / k;
    if t_len == 0 {
        return (Vec::new(), 0.0);
    }
    let mut b = vec![0.0; t_len * k];
    let mut shift = vec![0.0; t_len];
    for t in 0..t_len {
        let row = &log_emit[t * k..(t + 1) * k];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        shift[t] = m;
        for j in 0..k {
            b[t * k + j] = (row[j] - m).exp();
        }
    }
    let mut alpha = vec![0.0; t_len * k];
    let mut scale = vec![0.0; t_len];
    for j in 0..k {
        alpha[j] = init[j] * b[j];
    }
    scale[0] = alpha[..k].iter().sum();
    for j in 0..k {
        alpha[j] /= scale[0];
    }
    for t in 1..t_len {
        for j in 0..k {
            let mut s = 0.0;
            for i in 0..k {
                s += alpha[(t - 1) * k + i] * trans[i * k + j];
            }
            alpha[t * k + j] = s * b[t * k + j];
        }
        scale[t] = alpha[t * k..(t + 1) * k].iter().sum();
        for j in 0..k {
            alpha[t * k + j] /= scale[t];
        }
    }
    let mut beta = vec![1.0; t_len * k];
    for t in (0..t_len - 1).rev() {
        for i in 0..k {
            let mut s = 0.0;
            for j in 0..k {
                s += trans[i * k + j] * b[(t + 1) * k + j] * beta[(t + 1) * k + j];
            }
            beta[t * k + i] = s / scale[t + 1];
        }
    }
    let mut post = vec![0.0; t_len * k];
    for t in 0..t_len {
        let mut z = 0.0;
        for j in 0..k {
            let v = alpha[t * k + j] * beta[t * k + j];
            post[t * k + j] = v;
            z += v;
        }
        for j in 0..k {
            post[t * k + j] /= z;
        }
    }
    let ll = scale.iter().map(|c| c.ln()).sum::<f64>() + shift.iter().sum::<f64>();
    (post, ll)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmmConfig {
    pub max_epochs: usize,
    pub tol: f64,
    pub gmm: GmmConfig,
}

impl Default for HmmConfig {
    fn default() -> Self {
        Self {
            max_epochs: 10,
            tol: 1e-3,
            gmm: GmmConfig::default(),
        }
    }
}

/// Gaussian-emission HMM with fixed transitions and a uniform initial
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub emissions: Vec<Gaussian>,
    pub transitions: Vec<f64>,
    /// Mean per-point log-likelihood at each E-step.
    pub history: Vec<f64>,
}

impl HmmModel {
    pub fn k(&self) -> usize {
        self.emissions.len()
    }

    /// Posteriors `[n, k]` over all chains and the total log-likelihood.
    pub fn posteriors(&self, points: &[f64], chains: &[Range<usize>]) -> (Vec<f64>, f64) {
        let k = self.k();
        let d = self.emissions[0].dim();
        let init = vec![1.0 / k as f64; k];
        let per_chain: Vec<(Vec<f64>, f64)> = par::map_slice(chains, |c| {
            let mut le = Vec::with_capacity(c.len() * k);
            for i in c.clone() {
                let x = &points[i * d..(i + 1) * d];
                le.extend(self.emissions.iter().map(|g| g.log_pdf(x)));
            }
            forward_backward(&le, k, &self.transitions, &init)
        });
        let mut post = Vec::with_capacity(points.len() / d * k);
        let mut ll = 0.0;
        for (p, l) in per_chain {
            post.extend(p);
            ll += l;
        }
        (post, ll)
    }
}

fn check_chains(n: usize, chains: &[Range<usize>]) -> Result<()> {
    let mut expect = 0;
    for c in chains {
        if c.start != expect || c.end <= c.start {
            return Err(Error::InvalidArgument(format!(
                "chains must tile 0..{n} in order; got {c:?} at {expect}"
            )));
        }
        expect = c.end;
    }
    if expect != n {
        return Err(Error::InvalidArgument(format!(
            "chains cover 0..{expect}, expected 0..{n}"
        )));
    }
    Ok(())
}

/// Emission-only EM for an HMM with fixed transitions, starting from the
/// given GMM (or a fresh [`gmm_fit`]), then posterior decoding.
/// `points` must be in temporal order; `chains` tile `0..n` into
/// independent sequences.
pub fn hmm_fit_and_decode(
    points: &[f64],
    d: usize,
    chains: &[Range<usize>],
    k: usize,
    transitions: &[f64],
    cfg: &HmmConfig,
    init: Option<&GmmModel>,
    seed: SeedStream,
) -> Result<(HmmModel, ClusterAssignment)> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::shape(
            "hmm",
            format!("{} values not divisible by dimension {d}", points.len()),
        ));
    }
    let n = points.len() / d;
    check_chains(n, chains)?;
    if transitions.len() != k * k {
        return Err(Error::shape(
            "hmm",
            format!("transition matrix has {} entries, need {}", transitions.len(), k * k),
        ));
    }
    let fitted;
    let gmm = match init {
        Some(g) => g,
        None => {
            fitted = gmm_fit(points, d, k, &cfg.gmm, seed)?;
            &fitted
        }
    };
    let mut model = HmmModel {
        emissions: gmm.components.clone(),
        transitions: transitions.to_vec(),
        history: Vec::new(),
    };
    let mut post;
    loop {
        let (p, ll) = model.posteriors(points, chains);
        post = p;
        let mean_ll = ll / n as f64;
        let done =
            model.history.last().is_some_and(|&prev| mean_ll - prev < cfg.tol) || model.history.len() >= cfg.max_epochs;
        model.history.push(mean_ll);
        if done {
            break;
        }
        let updated = par::map_range(k, |c| {
            let w: Vec<f64> = (0..n).map(|i| post[i * k + c]).collect();
            Gaussian::fit_weighted(points, d, &w, &model.emissions[c])
        });
        model.emissions = updated;
    }
    let assignment = ClusterAssignment::from_posteriors(post, k);
    Ok((model, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_examples() {
        let a = build_transitions(2, 0.99, TransitionSemantics::SelfProb).unwrap();
        assert_eq!(a, vec![0.99, 0.010000000000000009, 0.010000000000000009, 0.99]);
        for k in 2..12 {
            for &p in &[0.01, 0.3, 0.5, 0.9, 0.97, 0.999999] {
                let a = build_transitions(k, p, TransitionSemantics::SelfProb).unwrap();
                for r in a.chunks(k) {
                    assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12, "k {k} p {p}");
                }
            }
        }
        let v = build_transitions(3, 0.9, TransitionSemantics::Complement).unwrap();
        assert!((v[0] - 0.1).abs() < 1e-12);
        assert!((v[1] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn self_transition_counts() {
        let l = [0, 0, 0, 1, 1];
        assert_eq!(estimate_self_transition(&l, &[0..5]).unwrap(), 0.75);
        assert_eq!(estimate_self_transition(&[2; 6], &[0..6]).unwrap(), 1.0);
        assert!(estimate_self_transition(&[1], &[0..1]).is_err());
        // chain breaks are not pairs
        assert_eq!(estimate_self_transition(&[0, 1, 1], &[0..1, 1..3]).unwrap(), 1.0);
    }

    #[test]
    fn constant_p_is_clamped() {
        let a = build_transitions(2, 1.0, TransitionSemantics::SelfProb).unwrap();
        assert!(a[1] > 0.0);
    }
}

use super::gaussian::Gaussian;
use super::kmeans::kmeans;
use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    pub tol: f64,
    pub max_steps: usize,
    pub n_init: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_steps: 100,
            n_init: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub components: Vec<Gaussian>,
    /// Mean per-point log-likelihood at the final E-step.
    pub log_likelihood: f64,
    /// Mean log-likelihood at every E-step of the winning run.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, Gaussian::dim)
    }

    /// Posterior class probabilities, row-major `[n, k]`, and the mean
    /// log-likelihood.
    pub fn responsibilities(&self, points: &[f64]) -> (Vec<f64>, f64) {
        let d = self.dim();
        let k = self.k();
        let n = points.len() / d;
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        let rows: Vec<(Vec<f64>, f64)> = par::map_range(n, |i| {
            let x = &points[i * d..(i + 1) * d];
            let lp: Vec<f64> = (0..k).map(|c| log_w[c] + self.components[c].log_pdf(x)).collect();
            let m = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = lp.iter().map(|v| (v - m).exp()).sum();
            let lse = m + s.ln();
            (lp.iter().map(|v| (v - lse).exp()).collect(), lse)
        });
        let mut resp = Vec::with_capacity(n * k);
        let mut ll = 0.0;
        for (r, l) in rows {
            resp.extend(r);
            ll += l;
        }
        (resp, ll / n as f64)
    }

    pub fn predict(&self, points: &[f64]) -> ClusterAssignment {
        let (resp, _) = self.responsibilities(points);
        ClusterAssignment::from_posteriors(resp, self.k())
    }
}

fn m_step(points: &[f64], d: usize, resp: &[f64], k: usize, prev: &[Gaussian]) -> (Vec<f64>, Vec<Gaussian>) {
    let n = points.len() / d;
    let comps: Vec<(f64, Gaussian)> = par::map_range(k, |c| {
        let w: Vec<f64> = (0..n).map(|i| resp[i * k + c]).collect();
        let nk: f64 = w.iter().sum();
        (nk, Gaussian::fit_weighted(points, d, &w, &prev[c]))
    });
    let weights = comps.iter().map(|(nk, _)| nk / n as f64).collect();
    (weights, comps.into_iter().map(|(_, g)| g).collect())
}

fn fit_once(points: &[f64], d: usize, k: usize, cfg: &GmmConfig, seed: SeedStream) -> Result<GmmModel> {
    let n = points.len() / d;
    let km = kmeans(points, d, k, 1, seed)?;
    let mut resp = vec![0.0; n * k];
    for (i, &l) in km.labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    // fallback for components that receive no mass
    let global = Gaussian::fit_weighted(points, d, &vec![1.0; n], &Gaussian::new(vec![0.0; d], identity(d)));
    let fallback: Vec<Gaussian> = (0..k)
        .map(|c| Gaussian::new(km.centers[c * d..(c + 1) * d].to_vec(), global.cov.clone()))
        .collect();
    let (mut weights, mut comps) = m_step(points, d, &resp, k, &fallback);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_steps {
        let model = GmmModel {
            weights: weights.clone(),
            components: comps.clone(),
            log_likelihood: 0.0,
            history: Vec::new(),
            converged: false,
        };
        let (r, ll) = model.responsibilities(points);
        let done = history.last().is_some_and(|&prev: &f64| ll - prev < cfg.tol);
        history.push(ll);
        if done {
            converged = true;
            break;
        }
        let (w, c) = m_step(points, d, &r, k, &comps);
        weights = w;
        comps = c;
    }
    if !converged {
        // score the parameters from the last M-step
        let model = GmmModel {
            weights: weights.clone(),
            components: comps.clone(),
            log_likelihood: 0.0,
            history: Vec::new(),
            converged: false,
        };
        history.push(model.responsibilities(points).1);
    }
    Ok(GmmModel {
        weights,
        components: comps,
        log_likelihood: *history.last().unwrap(),
        history,
        converged,
    })
}

pub(crate) fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Full-covariance EM, k-means initialized; the best of `n_init` runs by
/// log-likelihood. Stops when the mean log-likelihood improves by less than
/// `tol` or after `max_steps` E-steps.
pub fn gmm_fit(points: &[f64], d: usize, k: usize, cfg: &GmmConfig, seed: SeedStream) -> Result<GmmModel> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::shape(
            "gmm_fit",
            format!("{} values not divisible by dimension {d}", points.len()),
        ));
    }
    let n = points.len() / d;
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!(
            "GMM needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut best: Option<GmmModel> = None;
    for run in 0..cfg.n_init.max(1) {
        let m = fit_once(points, d, k, cfg, seed.index(run as u64))?;
        if best.as_ref().is_none_or(|b| m.log_likelihood > b.log_likelihood) {
            best = Some(m);
        }
    }
    Ok(best.unwrap())
}

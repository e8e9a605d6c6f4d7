use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Handle to a parameter inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Param {
    name: String,
    value: Tensor,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Named trainable tensors and their Adam moments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    params: Vec<Param>,
    step: u64,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let n = value.len();
        self.params.push(Param {
            name: name.into(),
            value,
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn named_tensors(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|p| (p.name.as_str(), &p.value))
    }

    /// Zero gradients shaped like every parameter.
    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect()
    }

    /// One bias-corrected Adam update (no weight decay). `grads` is indexed
    /// like the parameters. A non-finite gradient aborts without touching
    /// any parameter.
    pub fn adam_step(&mut self, grads: &[Tensor], cfg: &AdamConfig) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::shape(
                "adam_step",
                format!("{} gradients for {} parameters", grads.len(), self.params.len()),
            ));
        }
        for (p, g) in self.params.iter().zip(grads) {
            if g.shape() != p.value.shape() {
                return Err(Error::shape(
                    "adam_step",
                    format!(
                        "gradient for {} has shape {:?}, parameter {:?}",
                        p.name,
                        g.shape(),
                        p.value.shape()
                    ),
                ));
            }
            if !g.all_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", p.name)));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (p, g) in self.params.iter_mut().zip(grads) {
            let vals = p.value.data_mut();
            for (((x, m), v), &gv) in vals.iter_mut().zip(p.m.iter_mut()).zip(p.v.iter_mut()).zip(g.data()) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gv;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gv * gv;
                let mhat = *m / c1;
                let vhat = *v / c2;
                *x -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::from_vec(vec![1.0, -2.0]));
        ps.adam_step(&[Tensor::zeros(&[2])], &AdamConfig::default()).unwrap();
        assert_eq!(ps.get(id).data(), &[1.0, -2.0]);
        assert_eq!(ps.step(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::from_vec(vec![0.0, 0.0, 0.0]));
        let g = Tensor::from_vec(vec![3.0, -0.01, 250.0]);
        ps.adam_step(&[g], &AdamConfig::default()).unwrap();
        for (x, s) in ps.get(id).data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 1e-3).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::from_vec(vec![1.0]));
        let err = ps
            .adam_step(&[Tensor::from_vec(vec![f64::NAN])], &AdamConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains('w'));
        assert_eq!(ps.get(id).data(), &[1.0]);
        assert_eq!(ps.step(), 0);
    }

    #[test]
    fn convex_quadratic_descends() {
        // f(x) = Σ cᵢ (xᵢ - tᵢ)²
        let c = [1.0, 4.0, 0.5];
        let t = [0.3, -0.2, 0.05];
        let mut ps = ParamSet::new();
        let id = ps.add("x", Tensor::from_vec(vec![1.0, 1.0, -1.0]));
        let cfg = AdamConfig::default();
        let f = |x: &[f64]| -> f64 { (0..3).map(|i| c[i] * (x[i] - t[i]).powi(2)).sum() };
        let mut losses = vec![];
        for _ in 0..200 {
            let x = ps.get(id).data().to_vec();
            losses.push(f(&x));
            let g = (0..3).map(|i| 2.0 * c[i] * (x[i] - t[i])).collect();
            ps.adam_step(&[Tensor::from_vec(g)], &cfg).unwrap();
        }
        for w in losses[10..].windows(2) {
            assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
        }
    }
}

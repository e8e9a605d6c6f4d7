use super::fan_in_uniform;
use crate::error::Result;
use crate::numerics::{dense_backward, dense_forward, relu_backward, relu_forward, ParamId, ParamSet, Tensor};
use crate::seed::SeedStream;

pub const HEAD_HIDDEN: usize = 250;

/// `input → 250 → ReLU → K` softmax classifier. Only used to give the
/// encoder a training signal; it never takes part in inference.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    params: ParamSet,
    ids: [ParamId; 4],
    classes: usize,
}

#[derive(Debug, Clone)]
pub struct HeadCache {
    input: Tensor,
    hidden: Tensor,
}

impl ClassifierHead {
    pub fn new(input: usize, classes: usize, seed: SeedStream) -> Self {
        let mut rng = seed.rng();
        let mut params = ParamSet::new();
        let h = HEAD_HIDDEN;
        let ids = [
            params.add("head0.weight", fan_in_uniform(&[h, input], input, &mut rng)),
            params.add("head0.bias", fan_in_uniform(&[h], input, &mut rng)),
            params.add("head1.weight", fan_in_uniform(&[classes, h], h, &mut rng)),
            params.add("head1.bias", fan_in_uniform(&[classes], h, &mut rng)),
        ];
        Self { params, ids, classes }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn forward(&self, z: &Tensor) -> Result<(Tensor, HeadCache)> {
        let [w0, b0, w1, b1] = self.ids;
        let hidden = dense_forward(z, self.params.get(w0), self.params.get(b0))?;
        let logits = dense_forward(&relu_forward(&hidden), self.params.get(w1), self.params.get(b1))?;
        Ok((
            logits,
            HeadCache {
                input: z.clone(),
                hidden,
            },
        ))
    }

    /// Returns (parameter gradients, gradient w.r.t. the head input).
    pub fn backward(&self, cache: &HeadCache, grad_logits: &Tensor) -> Result<(Vec<Tensor>, Tensor)> {
        let [w0, b0, w1, b1] = self.ids;
        let mut grads = self.params.zero_grads();
        let g1 = dense_backward(&relu_forward(&cache.hidden), self.params.get(w1), grad_logits)?;
        grads[w1.index()] = g1.weights;
        grads[b1.index()] = g1.bias;
        let gh = relu_backward(&cache.hidden, &g1.input);
        let g0 = dense_backward(&cache.input, self.params.get(w0), &gh)?;
        grads[w0.index()] = g0.weights;
        grads[b0.index()] = g0.bias;
        Ok((grads, g0.input))
    }
}

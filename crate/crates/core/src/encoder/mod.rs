//! Shared-weight 1D CNN encoder and the disposable classifier head used for
//! pseudo-label training.
//!
//! Every channel of a `[C, 512]` window goes through the same four
//! conv → batchnorm → ReLU → maxpool stages. Channels are folded into the
//! batch axis, so a batch of `B` windows is a `[B·C, 512]` tensor to the conv
//! stack. The per-channel 32-d outputs are concatenated and projected to the
//! 32-d latent by one dense layer.

mod checkpoint;
mod head;
mod train;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    batchnorm_backward, batchnorm_forward, conv1d_backward, conv1d_forward, conv_out_len, dense_backward,
    dense_forward, maxpool1d_backward, maxpool1d_forward, relu_backward, relu_forward, BatchNormCache, BnMode, ParamId,
    ParamSet, PoolIndices, RunningStats, Tensor,
};
use crate::seed::{Rng, SeedStream};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use head::{ClassifierHead, HeadCache, HEAD_HIDDEN};
pub use train::{loss_and_grads, pseudo_label_train, TrainConfig, TrainReport};

pub const WINDOW_LEN: usize = 512;
pub const LATENT_DIM: usize = 32;
pub const PROJECTOR_HIDDEN: usize = 256;
pub const PROJECTOR_OUT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filter_len: usize,
    pub stride: usize,
    pub filters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub channels: usize,
    pub window: usize,
    pub convs: Vec<ConvSpec>,
    pub pool: usize,
    pub latent: usize,
    /// Adds a 32 → 256 → 2 MLP after the latent layer; its 2-d output then
    /// replaces UMAP as the clustering space.
    pub projector: bool,
}

impl EncoderConfig {
    pub fn new(channels: usize) -> Self {
        let spec = |filter_len, stride, filters| ConvSpec {
            filter_len,
            stride,
            filters,
        };
        Self {
            channels,
            window: WINDOW_LEN,
            convs: vec![spec(50, 2, 4), spec(40, 2, 8), spec(7, 1, 16), spec(4, 1, 32)],
            pool: 2,
            latent: LATENT_DIM,
            projector: false,
        }
    }

    /// Temporal length after each conv and each pool, in order.
    pub fn length_chain(&self) -> Result<Vec<usize>> {
        let mut len = self.window;
        let mut chain = vec![len];
        for (i, c) in self.convs.iter().enumerate() {
            if len < c.filter_len || c.stride == 0 {
                return Err(Error::shape(
                    "encoder",
                    format!("stage {i}: length {len} too short for filter {}", c.filter_len),
                ));
            }
            len = conv_out_len(len, c.filter_len, c.stride);
            chain.push(len);
            len /= self.pool;
            chain.push(len);
        }
        Ok(chain)
    }

    fn features_per_channel(&self) -> usize {
        self.convs.last().map_or(1, |c| c.filters)
    }

    /// Width of the concatenated pre-dense feature vector.
    pub fn dense_input(&self) -> usize {
        self.channels * self.features_per_channel()
    }

    /// Dimension of the space handed to the clusterer and head.
    pub fn output_dim(&self) -> usize {
        if self.projector {
            PROJECTOR_OUT
        } else {
            self.latent
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::InvalidArgument("encoder needs at least one channel".into()));
        }
        if self.window != WINDOW_LEN {
            return Err(Error::InvalidArgument(format!(
                "window length must be {WINDOW_LEN}, got {}",
                self.window
            )));
        }
        let chain = self.length_chain()?;
        if chain.last() != Some(&1) {
            return Err(Error::shape(
                "encoder",
                format!("final temporal length must be 1, chain {chain:?}"),
            ));
        }
        Ok(())
    }
}

/// Uniform `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` tensor.
pub(crate) fn fan_in_uniform(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape product matches")
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ConvIds {
    weight: ParamId,
    bias: ParamId,
    scale: ParamId,
    shift: ParamId,
}

#[derive(Debug, Clone)]
struct StageCache {
    input: Tensor,
    bn: BatchNormCache,
    pre_relu: Tensor,
    pool: PoolIndices,
}

/// Intermediate values of a forward pass needed by [`Encoder::backward`].
#[derive(Debug, Clone)]
pub struct EncoderCache {
    batch: usize,
    stages: Vec<StageCache>,
    dense_in: Tensor,
    proj: Option<(Tensor, Tensor)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    cfg: EncoderConfig,
    params: ParamSet,
    convs: Vec<ConvIds>,
    dense: (ParamId, ParamId),
    proj: Option<[ParamId; 4]>,
    stats: Vec<RunningStats>,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig, seed: SeedStream) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seed.rng();
        let mut params = ParamSet::new();
        let mut convs = Vec::new();
        let mut stats = Vec::new();
        let mut in_ch = 1;
        for (i, c) in cfg.convs.iter().enumerate() {
            let fan_in = in_ch * c.filter_len;
            let wshape = if i == 0 {
                vec![c.filters, c.filter_len]
            } else {
                vec![c.filters, in_ch, c.filter_len]
            };
            let weight = params.add(format!("conv{i}.weight"), fan_in_uniform(&wshape, fan_in, &mut rng));
            let bias = params.add(format!("conv{i}.bias"), fan_in_uniform(&[c.filters], fan_in, &mut rng));
            let scale = params.add(format!("bn{i}.scale"), Tensor::filled(&[c.filters], 1.0));
            let shift = params.add(format!("bn{i}.shift"), Tensor::zeros(&[c.filters]));
            convs.push(ConvIds {
                weight,
                bias,
                scale,
                shift,
            });
            stats.push(RunningStats::new(c.filters));
            in_ch = c.filters;
        }
        let din = cfg.dense_input();
        let dense = (
            params.add("dense.weight", fan_in_uniform(&[cfg.latent, din], din, &mut rng)),
            params.add("dense.bias", fan_in_uniform(&[cfg.latent], din, &mut rng)),
        );
        let proj = cfg.projector.then(|| {
            let (h, o, l) = (PROJECTOR_HIDDEN, PROJECTOR_OUT, cfg.latent);
            [
                params.add("proj0.weight", fan_in_uniform(&[h, l], l, &mut rng)),
                params.add("proj0.bias", fan_in_uniform(&[h], l, &mut rng)),
                params.add("proj1.weight", fan_in_uniform(&[o, h], h, &mut rng)),
                params.add("proj1.bias", fan_in_uniform(&[o], h, &mut rng)),
            ]
        });
        Ok(Self {
            cfg,
            params,
            convs,
            dense,
            proj,
            stats,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn running_stats(&self) -> &[RunningStats] {
        &self.stats
    }

    pub(crate) fn running_stats_mut(&mut self) -> &mut [RunningStats] {
        &mut self.stats
    }

    /// Forward pass over a `[B, C, 512]` batch. Train mode uses batch
    /// statistics and updates the running statistics.
    pub fn forward(&mut self, x: &Tensor, mode: BnMode) -> Result<(Tensor, EncoderCache)> {
        let mut stats = std::mem::take(&mut self.stats);
        let out = self.forward_with(x, mode, &mut stats);
        self.stats = stats;
        out
    }

    fn forward_with(&self, x: &Tensor, mode: BnMode, stats: &mut [RunningStats]) -> Result<(Tensor, EncoderCache)> {
        let (b, c) = match x.shape() {
            [b, c, w] if *c == self.cfg.channels && *w == self.cfg.window => (*b, *c),
            [_, c, w] if *w == self.cfg.window => {
                return Err(Error::shape(
                    "encode",
                    format!("channels: input has {c}, encoder expects {}", self.cfg.channels),
                ))
            }
            s => {
                return Err(Error::shape(
                    "encode",
                    format!("expected [B, {}, {}], got {s:?}", self.cfg.channels, self.cfg.window),
                ))
            }
        };
        let mut h = Tensor::new(vec![b * c, self.cfg.window], x.data().to_vec())?;
        let mut stages = Vec::with_capacity(self.convs.len());
        for (i, ids) in self.convs.iter().enumerate() {
            let spec = self.cfg.convs[i];
            let conv = conv1d_forward(&h, self.params.get(ids.weight), self.params.get(ids.bias), spec.stride)?;
            let (bn, bn_cache) = batchnorm_forward(
                &conv,
                self.params.get(ids.scale),
                self.params.get(ids.shift),
                mode,
                &mut stats[i],
            )?;
            let act = relu_forward(&bn);
            let (pooled, pool) = maxpool1d_forward(&act, self.cfg.pool)?;
            stages.push(StageCache {
                input: h,
                bn: bn_cache,
                pre_relu: bn,
                pool,
            });
            h = pooled;
        }
        let dense_in = h.reshape(&[b, self.cfg.dense_input()])?;
        let latent = dense_forward(&dense_in, self.params.get(self.dense.0), self.params.get(self.dense.1))?;
        let (out, proj) = match self.proj {
            Some([w0, b0, w1, b1]) => {
                let hidden = dense_forward(&latent, self.params.get(w0), self.params.get(b0))?;
                let out = dense_forward(&relu_forward(&hidden), self.params.get(w1), self.params.get(b1))?;
                (out, Some((latent, hidden)))
            }
            None => (latent, None),
        };
        Ok((
            out,
            EncoderCache {
                batch: b,
                stages,
                dense_in,
                proj,
            },
        ))
    }

    /// Gradients of every encoder parameter (in `ParamSet` order) given the
    /// gradient with respect to the encoder output.
    pub fn backward(&self, cache: &EncoderCache, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let mut grads = self.params.zero_grads();
        let grad_latent = match (self.proj, &cache.proj) {
            (Some([w0, b0, w1, b1]), Some((latent, hidden))) => {
                let act = relu_forward(hidden);
                let g1 = dense_backward(&act, self.params.get(w1), grad_out)?;
                grads[w1.index()] = g1.weights;
                grads[b1.index()] = g1.bias;
                let gh = relu_backward(hidden, &g1.input);
                let g0 = dense_backward(latent, self.params.get(w0), &gh)?;
                grads[w0.index()] = g0.weights;
                grads[b0.index()] = g0.bias;
                g0.input
            }
            (None, None) => grad_out.clone(),
            _ => {
                return Err(Error::InvalidArgument(
                    "cache does not match encoder configuration".into(),
                ))
            }
        };
        let gd = dense_backward(&cache.dense_in, self.params.get(self.dense.0), &grad_latent)?;
        grads[self.dense.0.index()] = gd.weights;
        grads[self.dense.1.index()] = gd.bias;
        let last = self.cfg.features_per_channel();
        let mut g = gd.input.reshape(&[cache.batch * self.cfg.channels, last, 1])?;
        for (i, ids) in self.convs.iter().enumerate().rev() {
            let st = &cache.stages[i];
            let g_act = maxpool1d_backward(&g, &st.pool)?;
            let g_bn = relu_backward(&st.pre_relu, &g_act);
            let (g_conv, g_scale, g_shift) = batchnorm_backward(&g_bn, &st.bn, self.params.get(ids.scale))?;
            grads[ids.scale.index()] = g_scale;
            grads[ids.shift.index()] = g_shift;
            let cg = conv1d_backward(
                &st.input,
                self.params.get(ids.weight),
                self.cfg.convs[i].stride,
                &g_conv,
                i > 0,
            )?;
            grads[ids.weight.index()] = cg.filters;
            grads[ids.bias.index()] = cg.bias;
            if let Some(gi) = cg.input {
                g = gi;
            }
        }
        Ok(grads)
    }

    /// Per-channel conv-stage features `[B, C, 32]` in eval mode, before the
    /// dense layer.
    pub fn channel_features(&self, x: &Tensor) -> Result<Tensor> {
        let mut stats = self.stats.clone();
        let (_, cache) = self.forward_with(x, BnMode::Eval, &mut stats)?;
        let b = cache.batch;
        cache
            .dense_in
            .reshape(&[b, self.cfg.channels, self.cfg.features_per_channel()])
    }

    /// Eval-mode encoding of a `[B, C, 512]` batch.
    pub fn encode_batch(&self, x: &Tensor) -> Result<Tensor> {
        let mut stats = self.stats.clone();
        Ok(self.forward_with(x, BnMode::Eval, &mut stats)?.0)
    }

    /// Eval-mode encoding of row-major `[n, C, 512]` windows, processed in
    /// chunks of `chunk` windows. Returns `[n, output_dim]`.
    pub fn encode_all(&self, windows: &[f64], chunk: usize) -> Result<Vec<f64>> {
        let per = self.cfg.channels * self.cfg.window;
        if !windows.len().is_multiple_of(per) {
            return Err(Error::shape(
                "encode",
                format!("{} values is not a whole number of windows", windows.len()),
            ));
        }
        let mut out = Vec::with_capacity(windows.len() / per * self.cfg.output_dim());
        for part in windows.chunks(chunk.max(1) * per) {
            let x = Tensor::new(
                vec![part.len() / per, self.cfg.channels, self.cfg.window],
                part.to_vec(),
            )?;
            out.extend_from_slice(self.encode_batch(&x)?.data());
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder output".into()));
        }
        Ok(out)
    }
}

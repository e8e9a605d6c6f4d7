use std::time::Instant;

use serde::Serialize;

use super::config::PipelineConfig;
use super::masks::MaskState;
use crate::clustering::{
    build_transitions, estimate_self_transition, gmm_fit, hmm_fit_and_decode, ClusterAssignment, HmmConfig,
};
use crate::data::WindowSet;
use crate::dimreduce::umap;
use crate::encoder::{pseudo_label_train, ClassifierHead, Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::metrics::{align_labels, ContingencyTable, Timing};
use crate::seed::SeedStream;

const ENCODE_CHUNK: usize = 256;

/// Window → most recent confident label, accumulated over outer
/// repetitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FinalTable {
    labels: Vec<Option<usize>>,
    /// `|Final|` after each repetition.
    pub sizes: Vec<usize>,
}

impl FinalTable {
    pub fn new(n: usize) -> Self {
        Self {
            labels: vec![None; n],
            sizes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, x: usize) -> Option<usize> {
        self.labels[x]
    }

    /// Writes `labels[x]` for every `x` in `members` and records the new size.
    pub fn record(&mut self, labels: &[usize], members: &[bool]) {
        for (x, (&l, &m)) in labels.iter().zip(members).enumerate() {
            if m {
                self.labels[x] = Some(l);
            }
        }
        self.sizes.push(self.len());
    }

    fn reference(&self) -> Vec<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(x, l)| l.map(|l| (x, l)))
            .collect()
    }
}

/// Renames the clusters of `assignment` to best agree with `reference`
/// (window index, label) pairs.
pub fn align_to(assignment: &mut ClusterAssignment, reference: &[(usize, usize)]) -> Result<()> {
    if reference.is_empty() {
        return Ok(());
    }
    let k = assignment.k;
    let truth: Vec<usize> = reference.iter().map(|&(_, l)| l).collect();
    let preds: Vec<usize> = reference.iter().map(|&(x, _)| assignment.labels[x]).collect();
    let table = ContingencyTable::new(&truth, &preds, k, k)?;
    let perm = align_labels(&table);
    assignment.relabel(&perm);
    Ok(())
}

/// Accumulated wall-clock per phase.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PhaseClock {
    pub train: f64,
    pub umap: f64,
    pub cluster: f64,
}

impl PhaseClock {
    pub fn timing(&self, total: f64, points: usize) -> Timing {
        Timing {
            train: self.train,
            umap: self.umap,
            cluster: self.cluster,
            total,
            per_point: if points > 0 { total / points as f64 } else { 0.0 },
        }
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed().as_secs_f64();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub mask: usize,
    pub semi: usize,
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
}

/// Result of one inner loop.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub assignment: ClusterAssignment,
    /// Membership of the last mask `M_T`.
    pub mask: Vec<bool>,
    /// Last clustering input, `[n, embedding_dim]`.
    pub embedding: Vec<f64>,
    pub embedding_dim: usize,
    pub iterations: Vec<IterationStats>,
    pub warnings: Vec<String>,
}

/// Everything a pipeline run over one window set produces.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub labels: Vec<usize>,
    pub confidence: Vec<f64>,
    pub embedding: Vec<f64>,
    pub embedding_dim: usize,
    pub final_table: FinalTable,
    pub repetitions: Vec<Vec<IterationStats>>,
    pub self_transition: f64,
    pub warnings: Vec<String>,
    pub(crate) clock: PhaseClock,
}

/// Resolved per-run constants shared by all inner loops.
pub(crate) struct RunContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub windows: &'a WindowSet,
    pub k: usize,
    pub chains: Vec<std::ops::Range<usize>>,
    pub transitions: Vec<f64>,
    pub self_transition: f64,
}

impl<'a> RunContext<'a> {
    pub fn new(cfg: &'a PipelineConfig, windows: &'a WindowSet, k: usize) -> Result<Self> {
        cfg.validate()?;
        if windows.is_empty() {
            return Err(Error::InvalidArgument("no windows to cluster".into()));
        }
        if windows.len() < k {
            return Err(Error::Degenerate(format!("{} windows for {k} clusters", windows.len())));
        }
        if windows.window != cfg.window {
            return Err(Error::InvalidArgument(format!(
                "windows have length {}, config expects {}",
                windows.window, cfg.window
            )));
        }
        let chains = windows.chains();
        let self_transition = match cfg.self_transition {
            Some(p) => p,
            None => estimate_self_transition(&windows.label, &chains).unwrap_or(0.5),
        };
        let transitions = build_transitions(k, self_transition, cfg.transition_semantics)?;
        Ok(Self {
            cfg,
            windows,
            k,
            chains,
            transitions,
            self_transition,
        })
    }

    fn encoder_config(&self) -> EncoderConfig {
        let mut e = EncoderConfig::new(self.windows.channels);
        e.window = self.cfg.window;
        e.projector = self.cfg.dimreduce_mlp;
        e
    }

    fn cluster(&self, points: &[f64], d: usize, seed: SeedStream) -> Result<ClusterAssignment> {
        let hmm = HmmConfig::default();
        if self.cfg.gmm {
            Ok(gmm_fit(points, d, self.k, &hmm.gmm, seed)?.predict(points))
        } else {
            Ok(hmm_fit_and_decode(points, d, &self.chains, self.k, &self.transitions, &hmm, None, seed)?.1)
        }
    }
}

/// One inner loop: `T` rounds of encode → reduce → cluster → update masks →
/// weighted pseudo-label training.
pub(crate) fn inner_loop(ctx: &RunContext, seed: SeedStream, clock: &mut PhaseClock) -> Result<InnerOutcome> {
    let cfg = ctx.cfg;
    let ws = ctx.windows;
    let n = ws.len();
    let ecfg = ctx.encoder_config();
    let train_cfg = cfg.train();
    let mut encoder = Encoder::new(ecfg.clone(), seed.child("encoder").index(0))?;
    let mut state = MaskState::new(n);
    let mut iterations = Vec::new();
    let mut warnings = Vec::new();
    let mut last: Option<(ClusterAssignment, Vec<f64>, usize)> = None;

    for i in 0..cfg.inner_iterations {
        let latent = timed(&mut clock.train, || encoder.encode_all(ws.data(), ENCODE_CHUNK))?;
        let out_dim = ecfg.output_dim();
        let (embedding, dim) = if cfg.no_umap || cfg.dimreduce_mlp {
            (latent, out_dim)
        } else {
            let umap_cfg = cfg.umap();
            let e = timed(&mut clock.umap, || {
                umap(&latent, out_dim, &umap_cfg, seed.child("umap").index(i as u64))
            })?;
            (e, umap_cfg.n_components)
        };
        let mut assignment = timed(&mut clock.cluster, || {
            ctx.cluster(&embedding, dim, seed.child("cluster").index(i as u64))
        })?;
        if let Some(prev) = state.previous() {
            let reference: Vec<(usize, usize)> = prev.iter().copied().enumerate().collect();
            align_to(&mut assignment, &reference)?;
        }
        let update = state.update_masks(
            &assignment.labels,
            &assignment.confidence,
            cfg.threshold,
            cfg.mask_semantics,
        )?;
        if update.fallback {
            warnings.push(format!(
                "iteration {}: only {} confident window(s); training on all windows",
                i + 1,
                update.mask_size
            ));
        }
        let mut stats = IterationStats {
            mask: update.mask_size,
            semi: update.semi_size,
            fallback: update.fallback,
            final_loss: None,
        };
        // the encoder is rebuilt for every repetition, so training after
        // the last clustering could not change any output
        if i + 1 < cfg.inner_iterations {
            let weights: Vec<f64> = if cfg.no_filter {
                vec![1.0; n]
            } else {
                state.weights().to_vec()
            };
            if cfg.reinit_encoder {
                encoder = Encoder::new(ecfg.clone(), seed.child("encoder").index(i as u64 + 1))?;
            }
            let mut head = ClassifierHead::new(out_dim, ctx.k, seed.child("head").index(i as u64));
            let report = timed(&mut clock.train, || {
                pseudo_label_train(
                    &mut encoder,
                    &mut head,
                    ws.data(),
                    &assignment.labels,
                    &weights,
                    &train_cfg,
                    seed.child("train").index(i as u64),
                )
            })?;
            stats.final_loss = report.epoch_loss.last().copied();
        }
        log::debug!("iteration {}: mask {} semi {}", i + 1, stats.mask, stats.semi);
        iterations.push(stats);
        last = Some((assignment, embedding, dim));
    }
    let (assignment, embedding, embedding_dim) = last.expect("at least one iteration");
    Ok(InnerOutcome {
        assignment,
        mask: state.mask().to_vec(),
        embedding,
        embedding_dim,
        iterations,
        warnings,
    })
}

/// Repeats the inner loop while `|Final|` strictly increases (at most
/// `max_outer` times). Each window's output label is its Final entry, or
/// the last repetition's label when it never was confident.
/// One pass of the inner self-training loop (encode, reduce, cluster,
/// update masks, retrain) with an explicit seed.
pub fn run_inner_loop(cfg: &PipelineConfig, windows: &WindowSet, k: usize, seed: SeedStream) -> Result<InnerOutcome> {
    let ctx = RunContext::new(cfg, windows, k)?;
    inner_loop(&ctx, seed, &mut PhaseClock::default())
}

pub fn run_outer_loop(cfg: &PipelineConfig, windows: &WindowSet, k: usize) -> Result<PipelineRun> {
    let ctx = RunContext::new(cfg, windows, k)?;
    outer_loop(&ctx)
}

pub(crate) fn outer_loop(ctx: &RunContext) -> Result<PipelineRun> {
    let cfg = ctx.cfg;
    let n = ctx.windows.len();
    let root = SeedStream::new(cfg.seed).child("pipeline");
    let mut clock = PhaseClock::default();
    let mut table = FinalTable::new(n);
    let mut repetitions = Vec::new();
    let mut warnings = Vec::new();
    let mut prev_size = 0;
    let mut last = None;
    for r in 0..cfg.max_outer {
        let mut out = inner_loop(ctx, root.index(r as u64), &mut clock)?;
        align_to(&mut out.assignment, &table.reference())?;
        table.record(&out.assignment.labels, &out.mask);
        warnings.extend(out.warnings.drain(..).map(|w| format!("repetition {}: {w}", r + 1)));
        repetitions.push(std::mem::take(&mut out.iterations));
        let size = table.len();
        last = Some(out);
        if size <= prev_size {
            break;
        }
        prev_size = size;
        if r + 1 == cfg.max_outer {
            warnings.push(format!(
                "outer loop stopped at the cap of {} repetitions while |Final| was still growing",
                cfg.max_outer
            ));
        }
    }
    let out = last.expect("max_outer >= 1");
    let labels: Vec<usize> = (0..n)
        .map(|x| table.get(x).unwrap_or(out.assignment.labels[x]))
        .collect();
    let confidence: Vec<f64> = (0..n)
        .map(|x| out.assignment.posteriors[x * ctx.k + labels[x]])
        .collect();
    Ok(PipelineRun {
        labels,
        confidence,
        embedding: out.embedding,
        embedding_dim: out.embedding_dim,
        final_table: table,
        repetitions,
        self_transition: ctx.self_transition,
        warnings,
        clock,
    })
}

/// The pared-down variant: HMM on raw latents, unweighted training, step
/// 100. `windows` must have been cut with step 100.
pub fn run_baseline(cfg: &PipelineConfig, windows: &WindowSet, k: usize) -> Result<PipelineRun> {
    if windows.step != 100 {
        return Err(Error::InvalidArgument(format!(
            "baseline runs on step-100 windows, got step {}",
            windows.step
        )));
    }
    run_outer_loop(&cfg.clone().baseline(), windows, k)
}

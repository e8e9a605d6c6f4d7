use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::masks::MaskSemantics;
use crate::clustering::TransitionSemantics;
use crate::dimreduce::UmapConfig;
use crate::encoder::{TrainConfig, WINDOW_LEN};
use crate::error::{Error, Result};
use crate::metrics::SubjectSetting;
use crate::numerics::AdamConfig;

/// Every knob of a pipeline run. Field names double as the keys of the flat
/// `key = value` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    /// Number of clusters; defaults to the dataset's class count.
    pub k: Option<usize>,
    pub window: usize,
    pub step: usize,
    pub inner_iterations: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub threshold: f64,
    pub setting: SubjectSetting,
    pub no_umap: bool,
    pub no_filter: bool,
    pub gmm: bool,
    pub dimreduce_mlp: bool,
    pub reinit_encoder: bool,
    pub mask_semantics: MaskSemantics,
    pub transition_semantics: TransitionSemantics,
    /// Fixed HMM self-transition probability; estimated from the window
    /// labels when unset.
    pub self_transition: Option<f64>,
    pub max_outer: usize,
    pub umap_neighbors: usize,
    pub umap_min_dist: f64,
    pub umap_epochs: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let umap = UmapConfig::default();
        Self {
            dataset: None,
            k: None,
            window: WINDOW_LEN,
            step: 5,
            inner_iterations: 10,
            epochs: 5,
            batch_size: 256,
            learning_rate: 1e-3,
            threshold: 0.95,
            setting: SubjectSetting::Dependent,
            no_umap: false,
            no_filter: false,
            gmm: false,
            dimreduce_mlp: false,
            reinit_encoder: true,
            mask_semantics: MaskSemantics::Loss,
            transition_semantics: TransitionSemantics::SelfProb,
            self_transition: None,
            max_outer: 10,
            umap_neighbors: umap.n_neighbors,
            umap_min_dist: umap.min_dist,
            umap_epochs: umap.n_epochs,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// The pared-down variant: no UMAP, no label filtering, step 100.
    pub fn baseline(mut self) -> Self {
        self.no_umap = true;
        self.no_filter = true;
        self.dimreduce_mlp = false;
        self.step = 100;
        self
    }

    pub fn is_baseline(&self) -> bool {
        self.no_umap && self.no_filter && !self.dimreduce_mlp && self.step == 100
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if self.inner_iterations == 0 {
            return bad("inner_iterations must be >= 1".into());
        }
        if self.max_outer == 0 {
            return bad("max_outer must be >= 1".into());
        }
        if self.window != WINDOW_LEN {
            return bad(format!("window must be {WINDOW_LEN}, got {}", self.window));
        }
        if self.step == 0 || self.batch_size == 0 {
            return bad("step and batch_size must be >= 1".into());
        }
        if self.k.is_some_and(|k| k < 2) {
            return bad("k must be >= 2".into());
        }
        if self.no_umap && self.dimreduce_mlp {
            return bad("no_umap and dimreduce_mlp are mutually exclusive".into());
        }
        if let Some(p) = self.self_transition {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("self_transition must lie in [0, 1], got {p}"));
            }
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive".into());
        }
        Ok(())
    }

    pub fn umap(&self) -> UmapConfig {
        UmapConfig {
            n_neighbors: self.umap_neighbors,
            min_dist: self.umap_min_dist,
            n_epochs: self.umap_epochs,
            ..UmapConfig::default()
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }

    /// Applies flat `key = value` lines on top of `self`. Blank lines and
    /// lines starting with `#` are ignored; values are read as JSON scalars
    /// when possible and as bare strings otherwise.
    pub fn apply_kv(self, text: &str, origin: &Path) -> Result<Self> {
        let Value::Object(mut base) = serde_json::to_value(&self)? else {
            unreachable!("config serializes to an object")
        };
        let mut seen = Map::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if !base.contains_key(key) {
                return Err(parse_err(format!("unknown key {key:?}")));
            }
            let value = value.trim();
            let v = serde_json::from_str::<Value>(value).unwrap_or_else(|_| Value::String(value.to_string()));
            seen.insert(key.to_string(), v);
        }
        base.extend(seen);
        let cfg: Self = serde_json::from_value(Value::Object(base)).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::default().apply_kv(&text, path)
    }
}

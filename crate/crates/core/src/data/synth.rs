use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, SensorRecording};
use crate::error::{Error, Result};
use crate::seed::SeedStream;

/// Frequency-coded synthetic activity data.
///
/// Class `k` emits `sin(2π f_k t + φ) + offset + N(0, noise_std²)` on every
/// channel, with `f_k = 0.5 + 0.75 k` Hz, a random phase `φ` per bout and a
/// fixed per-channel phase shift. Subject `s` adds the constant offset
/// `subject_offset_scale · s` (sign alternating across channels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub subjects: usize,
    pub channels: usize,
    /// Time points per activity bout.
    pub bout_len: usize,
    pub bouts_per_class: usize,
    /// Separate bouts by unlabeled gaps (discarded on load) instead of
    /// joining them into one contiguous stream.
    pub gaps: bool,
    pub subject_offset_scale: f64,
    pub noise_std: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            subjects: 2,
            channels: 3,
            bout_len: 800,
            bouts_per_class: 2,
            gaps: true,
            subject_offset_scale: 0.0,
            noise_std: 0.1,
            sample_rate_hz: 50.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn frequency(&self, class: usize) -> f64 {
        0.5 + 0.75 * class as f64
    }

    pub fn offset(&self, subject: usize, channel: usize) -> f64 {
        let sign = if channel.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.subject_offset_scale * subject as f64 * sign
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.classes < 2 {
        return Err(Error::InvalidArgument("synthetic data needs >= 2 classes".into()));
    }
    if cfg.channels == 0 || cfg.subjects == 0 || cfg.bout_len == 0 || cfg.bouts_per_class == 0 {
        return Err(Error::InvalidArgument(
            "channels, subjects, bout_len and bouts_per_class must be >= 1".into(),
        ));
    }
    if !(cfg.sample_rate_hz > 0.0) || !(cfg.noise_std >= 0.0) {
        return Err(Error::InvalidArgument(
            "sample rate must be positive and noise non-negative".into(),
        ));
    }
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let root = SeedStream::new(cfg.seed).child("synthetic");
    let dt = 1.0 / cfg.sample_rate_hz;
    let mut recordings = Vec::with_capacity(cfg.subjects);
    for s in 0..cfg.subjects {
        let mut rng = root.index(s as u64).rng();
        let mut order: Vec<usize> = (0..cfg.classes)
            .flat_map(|k| std::iter::repeat_n(k, cfg.bouts_per_class))
            .collect();
        order.shuffle(&mut rng);

        let n = order.len() * cfg.bout_len;
        let mut channels = vec![Vec::with_capacity(n); cfg.channels];
        let mut timestamps = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut span_starts = vec![0];
        let mut t = 0.0;
        for (b, &k) in order.iter().enumerate() {
            if b > 0 && cfg.gaps {
                span_starts.push(labels.len());
                // a one-second transition that would be discarded as unlabeled
                t += 1.0;
            }
            let phase = rng.gen_range(0.0..2.0 * PI);
            let f = cfg.frequency(k);
            for _ in 0..cfg.bout_len {
                for (c, ch) in channels.iter_mut().enumerate() {
                    let shift = PI * c as f64 / cfg.channels as f64;
                    let v = (2.0 * PI * f * t + phase + shift).sin() + cfg.offset(s, c) + noise.sample(&mut rng);
                    ch.push(v);
                }
                timestamps.push(t);
                labels.push(k);
                t += dt;
            }
        }
        recordings.push(SensorRecording {
            subject_id: format!("subject{s}"),
            sample_rate_hz: cfg.sample_rate_hz,
            channels,
            timestamps,
            labels,
            span_starts,
        });
    }
    Ok(Dataset {
        name: "synthetic".into(),
        class_names: (0..cfg.classes).map(|k| format!("activity{k}")).collect(),
        recordings,
    })
}

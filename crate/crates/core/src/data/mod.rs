//! Sensor recordings, ingestion, synthetic data, and sliding windows.

mod canonical;
mod synth;
mod window;
mod wisdm;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use canonical::{load_canonical, write_canonical};
pub use synth::{generate_synthetic, SynthConfig};
pub use window::{majority_window_label, make_windows, make_windows_with_stats, NormStats, WindowSet};
pub use wisdm::{adapt_wisdm_v1, AdaptReport};

/// One subject's multichannel signal. Only labeled, complete time points are
/// stored; wherever points were dropped the recording is split into
/// separate contiguous spans.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRecording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    /// One series per channel, all of equal length.
    pub channels: Vec<Vec<f64>>,
    pub timestamps: Vec<f64>,
    pub labels: Vec<usize>,
    /// Start index of each contiguous span; always begins with 0 when the
    /// recording is nonempty.
    pub span_starts: Vec<usize>,
}

impl SensorRecording {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn spans(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let n = self.len();
        self.span_starts.iter().enumerate().map(move |(i, &s)| {
            let e = self.span_starts.get(i + 1).copied().unwrap_or(n);
            s..e
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.timestamps.len() != n {
            return Err(Error::InvalidArgument(format!(
                "subject {}: {} timestamps for {n} labels",
                self.subject_id,
                self.timestamps.len()
            )));
        }
        if let Some((c, ch)) = self.channels.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "subject {}: channel {c} has {} samples, expected {n}",
                self.subject_id,
                ch.len()
            )));
        }
        let ok_spans = if n == 0 {
            self.span_starts.is_empty()
        } else {
            self.span_starts.first() == Some(&0)
                && self.span_starts.windows(2).all(|w| w[0] < w[1])
                && self.span_starts.last().is_some_and(|&s| s < n)
        };
        if !ok_spans {
            return Err(Error::InvalidArgument(format!(
                "subject {}: malformed span starts {:?}",
                self.subject_id, self.span_starts
            )));
        }
        Ok(())
    }
}

/// A labeled dataset: recordings plus the label vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub class_names: Vec<String>,
    pub recordings: Vec<SensorRecording>,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_channels(&self) -> usize {
        self.recordings.first().map_or(0, |r| r.n_channels())
    }

    pub fn spec(&self) -> DatasetSpec {
        DatasetSpec {
            name: self.name.clone(),
            classes: self.n_classes(),
            subjects: self.recordings.iter().map(|r| r.subject_id.clone()).collect(),
            channels: self.n_channels(),
        }
    }
}

/// Summary of a dataset. Normalization statistics live on the [`WindowSet`]
/// because they are computed from whatever subset is being clustered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub classes: usize,
    pub subjects: Vec<String>,
    pub channels: usize,
}

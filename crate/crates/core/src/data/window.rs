use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::SensorRecording;
use crate::error::{Error, Result};

/// Per-channel z-normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Overlapping fixed-length windows, stored as a contiguous `[N, C, W]`
/// buffer, ordered by (subject, start offset).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub channels: usize,
    pub window: usize,
    pub step: usize,
    data: Vec<f64>,
    /// Distinct subjects, indexed by `subject`.
    pub subject_ids: Vec<String>,
    pub subject: Vec<usize>,
    /// Index of the contiguous span (within its subject) the window came from.
    pub span: Vec<usize>,
    /// Start offset into the subject's recording.
    pub start: Vec<usize>,
    /// Majority label of the covered time points.
    pub label: Vec<usize>,
    pub stats: NormStats,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    /// `[C, W]` values of window `i`.
    pub fn get(&self, i: usize) -> &[f64] {
        let sz = self.channels * self.window;
        &self.data[i * sz..(i + 1) * sz]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Copies the selected windows into one `[len, C, W]` buffer.
    pub fn gather(&self, idx: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(idx.len() * self.channels * self.window);
        for &i in idx {
            out.extend_from_slice(self.get(i));
        }
        out
    }

    /// Maximal runs of consecutive windows from the same subject and span.
    /// These are the independent sequences a temporal model sees.
    pub fn chains(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut s = 0;
        for i in 1..=self.len() {
            if i == self.len() || self.subject[i] != self.subject[i - 1] || self.span[i] != self.span[i - 1] {
                out.push(s..i);
                s = i;
            }
        }
        out
    }

    /// Indices of windows belonging to subject `s`.
    pub fn subject_windows(&self, s: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.subject[i] == s).collect()
    }
}

/// Modal label; ties go to the smallest class index.
pub fn majority_window_label(labels: &[usize]) -> usize {
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

fn window_starts(span: &Range<usize>, window: usize, step: usize) -> impl Iterator<Item = usize> {
    let len = span.end - span.start;
    let count = if len < window { 0 } else { (len - window) / step + 1 };
    let base = span.start;
    (0..count).map(move |i| base + i * step)
}

/// Builds windows and z-normalizes every channel with statistics computed
/// over the windowed values themselves (each time point counted once per
/// covering window).
pub fn make_windows(recordings: &[SensorRecording], window: usize, step: usize) -> Result<WindowSet> {
    let stats = windowed_stats(recordings, window, step)?;
    make_windows_with_stats(recordings, window, step, stats)
}

fn check_args(recordings: &[SensorRecording], window: usize, step: usize) -> Result<usize> {
    if window == 0 || step == 0 {
        return Err(Error::InvalidArgument("window length and step must be >= 1".into()));
    }
    let channels = recordings.first().map_or(0, |r| r.n_channels());
    for r in recordings {
        r.validate()?;
        if r.n_channels() != channels {
            return Err(Error::InvalidArgument(format!(
                "subject {} has {} channels, expected {channels}",
                r.subject_id,
                r.n_channels()
            )));
        }
    }
    Ok(channels)
}

fn windowed_stats(recordings: &[SensorRecording], window: usize, step: usize) -> Result<NormStats> {
    let channels = check_args(recordings, window, step)?;
    let mut sum = vec![0.0; channels];
    let mut total = 0.0;
    let mut cover: Vec<Vec<f64>> = Vec::with_capacity(recordings.len());
    for r in recordings {
        // coverage multiplicity via a difference array
        let mut diff = vec![0i64; r.len() + 1];
        for span in r.spans() {
            for s in window_starts(&span, window, step) {
                diff[s] += 1;
                diff[s + window] -= 1;
            }
        }
        let mut acc = 0i64;
        let mult: Vec<f64> = diff[..r.len()]
            .iter()
            .map(|d| {
                acc += d;
                acc as f64
            })
            .collect();
        total += mult.iter().sum::<f64>();
        for (c, ch) in r.channels.iter().enumerate() {
            sum[c] += ch.iter().zip(&mult).map(|(x, m)| x * m).sum::<f64>();
        }
        cover.push(mult);
    }
    if total == 0.0 {
        return Ok(NormStats {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        });
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / total).collect();
    let mut var = vec![0.0; channels];
    for (r, mult) in recordings.iter().zip(&cover) {
        for (c, ch) in r.channels.iter().enumerate() {
            var[c] += ch
                .iter()
                .zip(mult)
                .map(|(x, m)| m * (x - mean[c]) * (x - mean[c]))
                .sum::<f64>();
        }
    }
    let std = var
        .iter()
        .map(|v| {
            let s = (v / total).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Ok(NormStats { mean, std })
}

/// Builds windows normalized with the given statistics.
pub fn make_windows_with_stats(
    recordings: &[SensorRecording],
    window: usize,
    step: usize,
    stats: NormStats,
) -> Result<WindowSet> {
    let channels = check_args(recordings, window, step)?;
    if stats.mean.len() != channels || stats.std.len() != channels {
        return Err(Error::InvalidArgument(format!(
            "normalization statistics cover {} channels, data has {channels}",
            stats.mean.len()
        )));
    }
    let mut ws = WindowSet {
        channels,
        window,
        step,
        data: Vec::new(),
        subject_ids: Vec::new(),
        subject: Vec::new(),
        span: Vec::new(),
        start: Vec::new(),
        label: Vec::new(),
        stats,
    };
    for r in recordings {
        let sid = match ws.subject_ids.iter().position(|s| *s == r.subject_id) {
            Some(i) => i,
            None => {
                ws.subject_ids.push(r.subject_id.clone());
                ws.subject_ids.len() - 1
            }
        };
        for (span_idx, span) in r.spans().enumerate() {
            for s in window_starts(&span, window, step) {
                for (c, ch) in r.channels.iter().enumerate() {
                    let (m, sd) = (ws.stats.mean[c], ws.stats.std[c]);
                    ws.data.extend(ch[s..s + window].iter().map(|x| (x - m) / sd));
                }
                ws.subject.push(sid);
                ws.span.push(span_idx);
                ws.start.push(s);
                ws.label.push(majority_window_label(&r.labels[s..s + window]));
            }
        }
    }
    Ok(ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(len: usize, span_starts: Vec<usize>) -> SensorRecording {
        SensorRecording {
            subject_id: "s".into(),
            sample_rate_hz: 1.0,
            channels: vec![(0..len).map(|i| i as f64).collect()],
            timestamps: (0..len).map(|i| i as f64).collect(),
            labels: vec![0; len],
            span_starts,
        }
    }

    #[test]
    fn count_and_offsets() {
        let ws = make_windows(&[rec(10, vec![0])], 4, 2).unwrap();
        assert_eq!(ws.start, vec![0, 2, 4, 6]);
        let ws = make_windows(&[rec(512, vec![0])], 512, 100).unwrap();
        assert_eq!(ws.len(), 1);
    }

    #[test]
    fn windows_do_not_cross_spans() {
        let ws = make_windows(&[rec(10, vec![0, 5])], 4, 1).unwrap();
        assert_eq!(ws.start, vec![0, 1, 5, 6]);
        assert_eq!(ws.span, vec![0, 0, 1, 1]);
        assert_eq!(ws.chains(), vec![0..2, 2..4]);
    }

    #[test]
    fn short_span_yields_nothing() {
        let ws = make_windows(&[rec(3, vec![0])], 4, 1).unwrap();
        assert!(ws.is_empty());
    }

    #[test]
    fn majority_ties_pick_smallest() {
        assert_eq!(majority_window_label(&[1, 1, 2]), 1);
        assert_eq!(majority_window_label(&[0, 0, 1, 1]), 0);
        assert_eq!(majority_window_label(&[3, 2, 3, 2]), 2);
    }
}

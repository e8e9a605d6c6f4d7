use std::time::Instant;

use serde::Serialize;

use super::config::PipelineConfig;
use super::run::{outer_loop, IterationStats, PhaseClock, PipelineRun, RunContext};
use crate::data::{make_windows, Dataset, SensorRecording, WindowSet};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_subject_dependent, pointwise_labels, score, ContingencyTable, Granularity, MetricsReport, Scores,
    Setting, SubjectEntry, SubjectSetting, Timing,
};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitSummary {
    /// Subject id, or `"pooled"` for the subject-independent setting.
    pub unit: String,
    pub windows: usize,
    pub self_transition: f64,
    pub final_sizes: Vec<usize>,
    pub repetitions: Vec<Vec<IterationStats>>,
}

/// Serialized result of [`evaluate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config: PipelineConfig,
    pub k: usize,
    pub reports: Vec<MetricsReport>,
    pub units: Vec<UnitSummary>,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl RunRecord {
    pub fn report(&self, granularity: Granularity) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.setting.granularity == granularity)
    }
}

/// One clustered window set together with its pipeline output.
#[derive(Debug, Clone)]
pub struct UnitOutput {
    pub name: String,
    pub windows: WindowSet,
    pub run: PipelineRun,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub record: RunRecord,
    pub units: Vec<UnitOutput>,
}

/// Per-subject (truth, prediction) pairs at time-point level: every point
/// covered by at least one window, predicted by majority vote.
fn point_pairs(
    ws: &WindowSet,
    preds: &[usize],
    recordings: &[&SensorRecording],
) -> Result<Vec<(String, Vec<usize>, Vec<usize>)>> {
    let mut out = Vec::new();
    for (s, sid) in ws.subject_ids.iter().enumerate() {
        let rec = recordings
            .iter()
            .find(|r| &r.subject_id == sid)
            .ok_or_else(|| Error::InvalidArgument(format!("no recording for subject {sid}")))?;
        let idx = ws.subject_windows(s);
        let p: Vec<usize> = idx.iter().map(|&i| preds[i]).collect();
        let starts: Vec<usize> = idx.iter().map(|&i| ws.start[i]).collect();
        let labels = pointwise_labels(&p, &starts, ws.window, rec.len())?;
        let (mut t, mut q) = (Vec::new(), Vec::new());
        for (truth, pred) in rec.labels.iter().zip(labels) {
            if let Some(pred) = pred {
                t.push(*truth);
                q.push(pred);
            }
        }
        out.push((sid.clone(), t, q));
    }
    Ok(out)
}

fn window_pairs(ws: &WindowSet, preds: &[usize]) -> Vec<(String, Vec<usize>, Vec<usize>)> {
    ws.subject_ids
        .iter()
        .enumerate()
        .map(|(s, sid)| {
            let idx = ws.subject_windows(s);
            (
                sid.clone(),
                idx.iter().map(|&i| ws.label[i]).collect(),
                idx.iter().map(|&i| preds[i]).collect(),
            )
        })
        .collect()
}

fn entry(subject: String, truth: &[usize], preds: &[usize], classes: usize, k: usize) -> Result<SubjectEntry> {
    let table = ContingencyTable::new(truth, preds, classes, k)?;
    Ok(SubjectEntry {
        subject,
        points: truth.len() as u64,
        metrics: score(truth, preds, classes, k)?,
        contingency: table.rows(),
    })
}

fn build_report(
    data: &Dataset,
    setting: Setting,
    pairs: Vec<(String, Vec<usize>, Vec<usize>)>,
    k: usize,
    timing: Timing,
) -> Result<MetricsReport> {
    let classes = data.n_classes();
    let mut per_subject = Vec::new();
    for (sid, t, p) in &pairs {
        if !t.is_empty() {
            per_subject.push(entry(sid.clone(), t, p, classes, k)?);
        }
    }
    let (metrics, contingency) = match setting.subject {
        SubjectSetting::Dependent => {
            let w: Vec<(Scores, u64)> = per_subject.iter().map(|e| (e.metrics, e.points)).collect();
            (aggregate_subject_dependent(&w)?, None)
        }
        SubjectSetting::Independent => {
            let t: Vec<usize> = pairs.iter().flat_map(|(_, t, _)| t.iter().copied()).collect();
            let p: Vec<usize> = pairs.iter().flat_map(|(_, _, p)| p.iter().copied()).collect();
            (
                score(&t, &p, classes, k)?,
                Some(ContingencyTable::new(&t, &p, classes, k)?),
            )
        }
    };
    Ok(MetricsReport {
        dataset: data.name.clone(),
        setting,
        metrics,
        per_subject,
        contingency,
        timing,
    })
}

/// Runs the configured pipeline under the configured subject setting and
/// scores it both window-wise and point-wise.
pub fn evaluate(cfg: &PipelineConfig, data: &Dataset) -> Result<Evaluation> {
    cfg.validate()?;
    let started = Instant::now();
    let k = cfg.k.unwrap_or(data.n_classes());
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 clusters, got {k}")));
    }
    for (i, r) in data.recordings.iter().enumerate() {
        if data.recordings[..i].iter().any(|o| o.subject_id == r.subject_id) {
            return Err(Error::InvalidArgument(format!(
                "subject {} appears twice",
                r.subject_id
            )));
        }
    }
    let mut warnings = Vec::new();
    let groups: Vec<(String, Vec<&SensorRecording>)> = match cfg.setting {
        SubjectSetting::Dependent => data
            .recordings
            .iter()
            .map(|r| (r.subject_id.clone(), vec![r]))
            .collect(),
        SubjectSetting::Independent => vec![("pooled".to_string(), data.recordings.iter().collect())],
    };
    let mut prepared = Vec::new();
    for (name, recs) in groups {
        let owned: Vec<SensorRecording> = recs.iter().map(|r| (*r).clone()).collect();
        let ws = make_windows(&owned, cfg.window, cfg.step)?;
        if ws.len() < k.max(2) {
            if cfg.setting == SubjectSetting::Dependent {
                warnings.push(format!("subject {name} skipped: {} windows for {k} clusters", ws.len()));
                continue;
            }
            return Err(Error::Degenerate(format!("{} windows for {k} clusters", ws.len())));
        }
        prepared.push((name, ws));
    }
    if prepared.is_empty() {
        return Err(Error::Degenerate("no subject has enough windows".into()));
    }
    let runs: Vec<Result<PipelineRun>> = par::map_slice(&prepared, |(_, ws)| {
        let ctx = RunContext::new(cfg, ws, k)?;
        outer_loop(&ctx)
    });
    let mut units = Vec::new();
    for ((name, windows), run) in prepared.into_iter().zip(runs) {
        let run = run?;
        warnings.extend(run.warnings.iter().map(|w| format!("{name}: {w}")));
        units.push(UnitOutput { name, windows, run });
    }

    let recs: Vec<&SensorRecording> = data.recordings.iter().collect();
    let mut window_pairs_all = Vec::new();
    let mut point_pairs_all = Vec::new();
    for u in &units {
        window_pairs_all.extend(window_pairs(&u.windows, &u.run.labels));
        point_pairs_all.extend(point_pairs(&u.windows, &u.run.labels, &recs)?);
    }
    let points: usize = units
        .iter()
        .flat_map(|u| u.windows.subject_ids.iter())
        .filter_map(|sid| recs.iter().find(|r| &r.subject_id == sid))
        .map(|r| r.len())
        .sum();
    let mut clock = PhaseClock::default();
    for u in &units {
        clock.train += u.run.clock.train;
        clock.umap += u.run.clock.umap;
        clock.cluster += u.run.clock.cluster;
    }
    let timing = clock.timing(started.elapsed().as_secs_f64(), points);
    let reports = vec![
        build_report(
            data,
            Setting {
                subject: cfg.setting,
                granularity: Granularity::Window,
            },
            window_pairs_all,
            k,
            timing,
        )?,
        build_report(
            data,
            Setting {
                subject: cfg.setting,
                granularity: Granularity::Point,
            },
            point_pairs_all,
            k,
            timing,
        )?,
    ];
    let summaries = units
        .iter()
        .map(|u| UnitSummary {
            unit: u.name.clone(),
            windows: u.windows.len(),
            self_transition: u.run.self_transition,
            final_sizes: u.run.final_table.sizes.clone(),
            repetitions: u.run.repetitions.clone(),
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Evaluation {
        record: RunRecord {
            config: cfg.clone(),
            k,
            reports,
            units: summaries,
            warnings,
            timing,
        },
        units,
    })
}

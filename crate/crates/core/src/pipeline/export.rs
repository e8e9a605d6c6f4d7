use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::PipelineConfig;
use super::evaluate::{evaluate, Evaluation};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{Granularity, Scores, SubjectSetting};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    }
}

/// `subject,start,label,cluster,confidence`, one row per window.
pub fn write_assignments(path: &Path, eval: &Evaluation) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["subject", "start", "label", "cluster", "confidence"])
        .map_err(|e| csv_err(path, e))?;
    for u in &eval.units {
        let ws = &u.windows;
        for i in 0..ws.len() {
            w.write_record([
                ws.subject_ids[ws.subject[i]].clone(),
                ws.start[i].to_string(),
                ws.label[i].to_string(),
                u.run.labels[i].to_string(),
                format!("{:.6}", u.run.confidence[i]),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `subject,start,e0,e1,...`: the last clustering input of every window.
pub fn write_embedding(path: &Path, eval: &Evaluation) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let dim = eval.units.first().map_or(0, |u| u.run.embedding_dim);
    let mut header = vec!["subject".to_string(), "start".to_string()];
    header.extend((0..dim).map(|j| format!("e{j}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for u in &eval.units {
        let ws = &u.windows;
        let d = u.run.embedding_dim;
        for i in 0..ws.len() {
            let mut row = vec![ws.subject_ids[ws.subject[i]].clone(), ws.start[i].to_string()];
            row.extend(u.run.embedding[i * d..(i + 1) * d].iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Column {
    pub subject: SubjectSetting,
    pub granularity: Granularity,
    pub metrics: Scores,
}

/// Baseline scores under the four evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2 {
    pub dataset: String,
    pub columns: Vec<Table2Column>,
}

impl Table2 {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.dataset);
        let _ = write!(s, "{:<6}", "");
        for c in &self.columns {
            let label = format!(
                "{}/{}",
                match c.subject {
                    SubjectSetting::Dependent => "sdep",
                    SubjectSetting::Independent => "sindep",
                },
                match c.granularity {
                    Granularity::Window => "window",
                    Granularity::Point => "point",
                }
            );
            let _ = write!(s, "{label:>15}");
        }
        s.push('\n');
        for name in Scores::NAMES {
            let _ = write!(s, "{:<6}", name.to_uppercase());
            for c in &self.columns {
                let _ = write!(s, "{:>15.2}", c.metrics.get(name).unwrap_or(f64::NAN) * 100.0);
            }
            s.push('\n');
        }
        s
    }
}

/// Runs the baseline once per subject setting; each run yields both
/// granularities.
pub fn table2(cfg: &PipelineConfig, data: &Dataset) -> Result<Table2> {
    let mut columns = Vec::new();
    for subject in [SubjectSetting::Dependent, SubjectSetting::Independent] {
        let c = PipelineConfig {
            setting: subject,
            ..cfg.clone().baseline()
        };
        let eval = evaluate(&c, data)?;
        for r in &eval.record.reports {
            columns.push(Table2Column {
                subject,
                granularity: r.setting.granularity,
                metrics: r.metrics,
            });
        }
    }
    Ok(Table2 {
        dataset: data.name.clone(),
        columns,
    })
}

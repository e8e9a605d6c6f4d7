use serde::{Serialize, Serializer};

use super::ContingencyTable;
use crate::error::{Error, Result};

/// Values are fractions in [0, 1] (ARI may be negative); serialized ×100
/// rounded to two decimals.
fn as_percent<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 10_000.0).round() / 100.0)
}

fn round6<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e6).round() / 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Scores {
    #[serde(serialize_with = "as_percent")]
    pub acc: f64,
    #[serde(serialize_with = "as_percent")]
    pub nmi: f64,
    #[serde(serialize_with = "as_percent")]
    pub ari: f64,
    #[serde(serialize_with = "as_percent")]
    pub f1: f64,
}

impl Scores {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "acc" => Some(self.acc),
            "nmi" => Some(self.nmi),
            "ari" => Some(self.ari),
            "f1" => Some(self.f1),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 4] = ["acc", "nmi", "ari", "f1"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectSetting {
    Dependent,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Window,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Setting {
    pub subject: SubjectSetting,
    pub granularity: Granularity,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Timing {
    #[serde(serialize_with = "round6")]
    pub train: f64,
    #[serde(serialize_with = "round6")]
    pub umap: f64,
    #[serde(serialize_with = "round6")]
    pub cluster: f64,
    #[serde(serialize_with = "round6")]
    pub total: f64,
    pub per_point: f64,
}

impl Timing {
    pub fn add(&mut self, other: &Timing) {
        self.train += other.train;
        self.umap += other.umap;
        self.cluster += other.cluster;
        self.total += other.total;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectEntry {
    pub subject: String,
    /// Data points scored (windows or time points).
    pub points: u64,
    pub metrics: Scores,
    pub contingency: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub setting: Setting,
    pub metrics: Scores,
    pub per_subject: Vec<SubjectEntry>,
    /// Pooled table; present for the subject-independent setting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contingency: Option<ContingencyTable>,
    pub timing: Timing,
}

/// Weighted arithmetic mean of each metric, weights = data points.
pub fn aggregate_subject_dependent(entries: &[(Scores, u64)]) -> Result<Scores> {
    if entries.is_empty() {
        return Err(Error::InvalidArgument("no subjects to aggregate".into()));
    }
    let total: u64 = entries.iter().map(|(_, w)| w).sum();
    if total == 0 {
        return Err(Error::InvalidArgument("subjects have zero total weight".into()));
    }
    let total = total as f64;
    let mut out = Scores::default();
    for (s, w) in entries {
        let w = *w as f64 / total;
        out.acc += w * s.acc;
        out.nmi += w * s.nmi;
        out.ari += w * s.ari;
        out.f1 += w * s.f1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(a: f64) -> Scores {
        Scores {
            acc: a,
            ..Scores::default()
        }
    }

    #[test]
    fn weighted_means() {
        let one = aggregate_subject_dependent(&[(acc(0.7), 5)]).unwrap();
        assert_eq!(one.acc, 0.7);
        let two = aggregate_subject_dependent(&[(acc(0.4), 10), (acc(0.6), 10)]).unwrap();
        assert!((two.acc - 0.5).abs() < 1e-12);
        let uneq = aggregate_subject_dependent(&[(acc(1.0), 10), (acc(0.5), 30)]).unwrap();
        assert!((uneq.acc - 0.625).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_rejected() {
        assert!(aggregate_subject_dependent(&[(acc(1.0), 0)]).is_err());
        assert!(aggregate_subject_dependent(&[]).is_err());
    }

    #[test]
    fn percent_serialization() {
        let s = Scores {
            acc: 0.86312,
            nmi: 0.5,
            ari: -0.01234,
            f1: 1.0,
        };
        let v = serde_json::to_value(s).unwrap();
        assert_eq!(v["acc"], 86.31);
        assert_eq!(v["ari"], -1.23);
        assert_eq!(v["f1"], 100.0);
    }
}

//! The canonical on-disk format: UTF-8 CSV with header
//! `subject,label,t,c0,c1,...`, one time point per row. An empty `label`
//! marks an unlabeled point; empty or `nan` channel values mark missing data.
//! Both kinds of row are dropped on load and split the subject's stream into
//! separate spans.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Dataset, SensorRecording};
use crate::error::{Error, Result};

#[derive(Default)]
struct SubjectBuilder {
    channels: Vec<Vec<f64>>,
    timestamps: Vec<f64>,
    labels: Vec<usize>,
    span_starts: Vec<usize>,
    gap: bool,
}

fn parse_value(field: &str) -> std::result::Result<Option<f64>, String> {
    let f = field.trim();
    if f.is_empty() || f.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    match f.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(_) => Err(format!("cannot parse {f:?} as a number")),
    }
}

fn median_rate(ts: &[f64], spans: &[usize]) -> f64 {
    let mut dts: Vec<f64> = Vec::new();
    for i in 1..ts.len() {
        if spans.binary_search(&i).is_err() {
            let d = ts[i] - ts[i - 1];
            if d > 0.0 {
                dts.push(d);
            }
        }
    }
    if dts.is_empty() {
        return 0.0;
    }
    dts.sort_by(f64::total_cmp);
    1.0 / dts[dts.len() / 2]
}

/// Reads a canonical file into one recording per subject (in order of first
/// appearance). Labels are mapped to dense indices in first-appearance order.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 4 || cols[0] != "subject" || cols[1] != "label" || cols[2] != "t" {
        return Err(parse_err(
            1,
            format!("expected header subject,label,t,c0,..., got {cols:?}"),
        ));
    }
    let n_ch = cols.len() - 3;

    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut subject_order: Vec<String> = Vec::new();
    let mut subjects: HashMap<String, SubjectBuilder> = HashMap::new();

    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != cols.len() {
            return Err(parse_err(
                line,
                format!(
                    "inconsistent channel count: {} fields, header has {}",
                    rec.len(),
                    cols.len()
                ),
            ));
        }
        let subject = rec[0].trim();
        if subject.is_empty() {
            return Err(parse_err(line, "empty subject field".into()));
        }
        let sb = subjects.entry(subject.to_string()).or_insert_with(|| {
            subject_order.push(subject.to_string());
            SubjectBuilder {
                channels: vec![Vec::new(); n_ch],
                ..SubjectBuilder::default()
            }
        });
        let t = parse_value(&rec[2]).map_err(|m| parse_err(line, m))?;
        let mut values = Vec::with_capacity(n_ch);
        for c in 0..n_ch {
            values.push(parse_value(&rec[3 + c]).map_err(|m| parse_err(line, m))?);
        }
        let label = rec[1].trim();
        let complete = t.is_some() && values.iter().all(Option::is_some);
        if label.is_empty() || !complete {
            sb.gap = true;
            continue;
        }
        let class = *class_index.entry(label.to_string()).or_insert_with(|| {
            class_names.push(label.to_string());
            class_names.len() - 1
        });
        if sb.labels.is_empty() || sb.gap {
            sb.span_starts.push(sb.labels.len());
        }
        sb.gap = false;
        sb.labels.push(class);
        sb.timestamps.push(t.unwrap());
        for (ch, v) in sb.channels.iter_mut().zip(values) {
            ch.push(v.unwrap());
        }
    }

    let recordings = subject_order
        .into_iter()
        .filter_map(|s| {
            let b = subjects.remove(&s)?;
            if b.labels.is_empty() {
                return None;
            }
            Some(SensorRecording {
                sample_rate_hz: median_rate(&b.timestamps, &b.span_starts),
                subject_id: s,
                channels: b.channels,
                timestamps: b.timestamps,
                labels: b.labels,
                span_starts: b.span_starts,
            })
        })
        .collect();

    Ok(Dataset {
        name: path
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned()),
        class_names,
        recordings,
    })
}

/// Writes a dataset in canonical form. Span boundaries are written as a
/// single unlabeled row so that loading the file reproduces them.
pub fn write_canonical(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let n_ch = data.n_channels();
    let mut header = String::from("subject,label,t");
    for c in 0..n_ch {
        header.push_str(&format!(",c{c}"));
    }
    writeln!(w, "{header}").map_err(io)?;
    for rec in &data.recordings {
        for (si, span) in rec.spans().enumerate() {
            if si > 0 {
                let t = 0.5 * (rec.timestamps[span.start - 1] + rec.timestamps[span.start]);
                write!(w, "{},,{}", rec.subject_id, t).map_err(io)?;
                for _ in 0..n_ch {
                    write!(w, ",").map_err(io)?;
                }
                writeln!(w).map_err(io)?;
            }
            for i in span {
                write!(
                    w,
                    "{},{},{}",
                    rec.subject_id, data.class_names[rec.labels[i]], rec.timestamps[i]
                )
                .map_err(io)?;
                for ch in &rec.channels {
                    write!(w, ",{}", ch[i]).map_err(io)?;
                }
                writeln!(w).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

//! Converter for the WISDM v1 raw accelerometer file
//! (`user,activity,timestamp,x,y,z;` records).

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptReport {
    pub rows_written: usize,
    pub rows_skipped: usize,
    pub activities: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Converts a raw WISDM v1 file to the canonical format with channels
/// `c0,c1,c2` = x, y, z. Records may end with `;` and may share a line.
/// Records with unparseable fields are skipped and counted.
pub fn adapt_wisdm_v1(raw: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<AdaptReport> {
    let raw = raw.as_ref();
    let out = out.as_ref();
    let text = std::fs::read_to_string(raw).map_err(|e| Error::io(raw, e))?;
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(out, e);
    writeln!(w, "subject,label,t,c0,c1,c2").map_err(io)?;

    let mut report = AdaptReport {
        rows_written: 0,
        rows_skipped: 0,
        activities: BTreeSet::new(),
        warnings: Vec::new(),
    };
    for record in text.split(['\n', ';']) {
        let record = record.trim().trim_end_matches(',');
        if record.is_empty() {
            continue;
        }
        let fields: Vec<&str> = record.split(',').map(str::trim).collect();
        let parsed = (fields.len() == 6).then(|| {
            let ts = fields[2].parse::<f64>().ok()?;
            let xyz: Option<Vec<f64>> = fields[3..6]
                .iter()
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            (!fields[0].is_empty() && !fields[1].is_empty()).then_some(())?;
            Some((ts, xyz?))
        });
        match parsed.flatten() {
            Some((ts, xyz)) => {
                writeln!(w, "{},{},{},{},{},{}", fields[0], fields[1], ts, xyz[0], xyz[1], xyz[2]).map_err(io)?;
                report.activities.insert(fields[1].to_string());
                report.rows_written += 1;
            }
            None => report.rows_skipped += 1,
        }
    }
    w.flush().map_err(io)?;
    if report.rows_skipped > 0 {
        report
            .warnings
            .push(format!("skipped {} unparseable records", report.rows_skipped));
    }
    if report.rows_written == 0 {
        report.warnings.push("no records written".into());
    }
    Ok(report)
}

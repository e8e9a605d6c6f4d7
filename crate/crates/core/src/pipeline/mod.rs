//! Iterative pseudo-label training with graded label filtering, and the
//! evaluation harness around it.

mod config;
mod evaluate;
mod export;
mod masks;
mod run;

pub use config::PipelineConfig;
pub use evaluate::{evaluate, Evaluation, RunRecord, UnitOutput, UnitSummary};
pub use export::{table2, write_assignments, write_embedding, Table2, Table2Column};
pub use masks::{MaskSemantics, MaskState, MaskUpdate};
pub use run::{
    align_to, run_baseline, run_inner_loop, run_outer_loop, FinalTable, InnerOutcome, IterationStats, PipelineRun,
};

/// JSON of a run record with every `timing` object removed, for comparing
/// runs byte for byte.
pub fn record_json_without_timing(record: &RunRecord) -> crate::Result<String> {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                m.remove("timing");
                m.values_mut().for_each(strip);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(record)?;
    strip(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

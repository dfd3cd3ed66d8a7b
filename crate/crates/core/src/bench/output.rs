use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::SolveTrace;

pub const TRACE_HEADER: [&str; 7] = [
    "iter",
    "resid_norm",
    "objective",
    "fevals_cum",
    "matvecs_cum",
    "wall_ns",
    "error_to_star",
];

pub const SUMMARY_HEADER: [&str; 13] = [
    "label",
    "method",
    "seed",
    "status",
    "termination",
    "iterations",
    "final_resid",
    "rel_resid",
    "fevals",
    "matvecs",
    "dots",
    "wall_ns",
    "error",
];

/// Shortest round-trip exponent form, so reruns print identical bytes.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// Writes one row per iterate. Missing quantities are empty fields;
/// `wall_ns` is written only when `timing` is set.
pub fn trace_to_csv(trace: &SolveTrace, path: impl AsRef<Path>, timing: bool) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER)?;
    for i in 0..trace.rows() {
        let opt = |v: Option<&f64>| v.map(|&x| fmt_f64(x)).unwrap_or_default();
        w.write_record([
            i.to_string(),
            fmt_f64(trace.residual_norms[i]),
            opt(trace.objective.get(i)),
            trace.fevals_cum.get(i).map(u64::to_string).unwrap_or_default(),
            trace.matvecs_cum.get(i).map(u64::to_string).unwrap_or_default(),
            if timing {
                trace.wall_nanos.get(i).map(u64::to_string).unwrap_or_default()
            } else {
                String::new()
            },
            opt(trace.error_to_star.get(i)),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One summary line; `outcome` holds the error message when the solver failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub method: String,
    pub seed: u64,
    pub outcome: std::result::Result<SummaryStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub termination: &'static str,
    pub iterations: usize,
    pub final_resid: f64,
    pub rel_resid: f64,
    pub fevals: u64,
    pub matvecs: u64,
    pub dots: u64,
    pub wall_ns: u64,
}

impl SummaryStats {
    pub fn from_trace(trace: &SolveTrace) -> Self {
        Self {
            termination: trace.termination.as_str(),
            iterations: trace.iterations(),
            final_resid: trace.final_residual(),
            rel_resid: trace.relative_residuals().last().copied().unwrap_or(f64::NAN),
            fevals: trace.feval_count,
            matvecs: trace.matvec_count,
            dots: trace.dot_count,
            wall_ns: trace.wall_nanos.last().copied().unwrap_or(0),
        }
    }
}

pub fn write_summary(rows: &[SummaryRow], path: impl AsRef<Path>, timing: bool) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        let mut rec = vec![row.label.clone(), row.method.clone(), row.seed.to_string()];
        match &row.outcome {
            Ok(s) => rec.extend([
                "ok".to_string(),
                s.termination.to_string(),
                s.iterations.to_string(),
                fmt_f64(s.final_resid),
                fmt_f64(s.rel_resid),
                s.fevals.to_string(),
                s.matvecs.to_string(),
                s.dots.to_string(),
                if timing { s.wall_ns.to_string() } else { String::new() },
                String::new(),
            ]),
            Err(msg) => {
                rec.push("failed".into());
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::Vector;
    use crate::trace::Recorder;

    #[test]
    fn one_iteration_gives_two_rows_and_empty_error_column() {
        let x = Vector::zeros(2);
        let mut t = SolveTrace::new("t", &x);
        let rec = Recorder::start();
        rec.row(&mut t, &x, 1.0, None, 1, 0);
        rec.row(&mut t, &x, 0.25, None, 2, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        trace_to_csv(&t, &path, false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "iter,resid_norm,objective,fevals_cum,matvecs_cum,wall_ns,error_to_star\n0,1e0,,1,0,,\n1,2.5e-1,,2,1,,\n"
        );
    }
}

//! CSV tables and `summary.txt`.
//!
//! Floats are printed with 17 significant digits so two runs agree byte for
//! byte exactly when they agree bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use snls_core::diagnostics::{scalar_time_norm, scattering_residual, StrichartzPair};
use snls_core::ensemble::{diagnostic_columns, diagnostic_values, EnsembleReport, EnsembleSpec};
use snls_core::TrajectoryRecord;

use crate::error::{LabError, LabResult};

/// `{:.16e}`, with `nan`, `inf` and `-inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> LabResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))?;
    Ok(())
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Per-checkpoint ledger of one trajectory: time, mass, dissipation, `L²`
/// and `L^∞` norms, the Strichartz norm over `[0, t_k]`, `M₀(t_k)` and the
/// scattering residual. `m0` is the maximal-function curve when one was
/// computed.
pub fn ledger_rows(rec: &TrajectoryRecord, pair: StrichartzPair, m0: Option<&[f64]>) -> LabResult<Vec<Vec<String>>> {
    let times = rec.times();
    let beta = pair.space.value();
    let space: Vec<f64> = rec.fields.iter().map(|u| u.lp_norm(beta)).collect::<Result<_, _>>()?;
    let scattering = scattering_residual(rec)?;
    let mut rows = Vec::with_capacity(rec.len());
    for k in 0..rec.len() {
        let u = &rec.fields[k];
        rows.push(vec![
            fmt_f64(times[k]),
            fmt_f64(rec.mass[k]),
            fmt_f64(rec.dissipation.as_ref().map_or(f64::NAN, |d| d[k])),
            fmt_f64(u.lp_norm(2.0)?),
            fmt_f64(u.max_amplitude()),
            fmt_f64(scalar_time_norm(&times[..=k], &space[..=k], pair.time)),
            fmt_f64(m0.map_or(f64::NAN, |m| m[k])),
            fmt_f64(scattering.points[k].residual),
        ]);
    }
    Ok(rows)
}

pub fn write_ledger(path: &Path, rec: &TrajectoryRecord, pair: StrichartzPair, m0: Option<&[f64]>) -> LabResult<()> {
    let cols = [
        "time",
        "mass",
        "dissipation",
        "l2",
        "linf",
        "strichartz_window",
        "M0",
        "scattering_residual",
    ];
    write_csv(path, &header(&cols), ledger_rows(rec, pair, m0)?)
}

/// Leading `(name, value)` columns shared by every row of a table.
pub type Prefix = Vec<(&'static str, String)>;

/// Per-path rows: prefix columns, path index, seed, status and every
/// diagnostic column (`nan` for aborted paths).
pub fn ensemble_rows(spec: &EnsembleSpec, report: &EnsembleReport, prefix: &Prefix) -> Vec<Vec<String>> {
    let ncols = diagnostic_columns(spec).len();
    report
        .paths
        .iter()
        .map(|o| {
            let mut row: Vec<String> = prefix.iter().map(|(_, v)| v.clone()).collect();
            row.push(o.path.to_string());
            row.push(o.stream.seed.to_string());
            match &o.result {
                Ok(d) => {
                    row.push("ok".into());
                    row.extend(diagnostic_values(spec, d).into_iter().map(fmt_f64));
                }
                Err(_) => {
                    row.push("aborted".into());
                    row.extend(std::iter::repeat_n("nan".to_string(), ncols));
                }
            }
            row
        })
        .collect()
}

pub fn ensemble_header(spec: &EnsembleSpec, prefix: &Prefix) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|(k, _)| k.to_string()).collect();
    h.extend(["path", "seed", "status"].map(String::from));
    h.extend(diagnostic_columns(spec));
    h
}

pub fn moment_rows(report: &EnsembleReport, prefix: &Prefix) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for row in &report.moments {
        for &(rho, m, se) in &row.values {
            let mut r: Vec<String> = prefix.iter().map(|(_, v)| v.clone()).collect();
            r.extend([row.diagnostic.clone(), fmt_f64(rho), fmt_f64(m), fmt_f64(se)]);
            rows.push(r);
        }
    }
    rows
}

pub fn moment_header(prefix: &Prefix) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|(k, _)| k.to_string()).collect();
    h.extend(["diagnostic", "rho", "moment", "stderr"].map(String::from));
    h
}

/// One named invariant of a preset. `passed = None` marks a reported-only row.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: Some(passed),
            detail: detail.into(),
        }
    }

    pub fn report(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Abort messages, each naming the path and its seed.
    pub aborts: Vec<String>,
    /// Time at which `--halt-after` stopped the run.
    pub halted_at: Option<f64>,
}

impl Summary {
    pub fn new(experiment: impl Into<String>) -> Self {
        Summary {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    /// 0 all invariants hold, 1 an invariant failed, 2 a path aborted,
    /// 3 halted for a later resume.
    pub fn exit_code(&self) -> i32 {
        if self.halted_at.is_some() {
            3
        } else if !self.aborts.is_empty() {
            2
        } else if !self.all_passed() {
            1
        } else {
            0
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment);
        for c in &self.checks {
            let tag = match c.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "INFO",
            };
            let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "WARN {w}");
        }
        for a in &self.aborts {
            let _ = writeln!(s, "ABORT {a}");
        }
        if let Some(t) = self.halted_at {
            let _ = writeln!(s, "HALTED after t = {t}; continue with --resume");
        }
        let verdict = match self.exit_code() {
            0 => "pass",
            1 => "fail",
            2 => "abort",
            _ => "halted",
        };
        let _ = writeln!(s, "result: {verdict} (exit {})", self.exit_code());
        s
    }

    pub fn write(&self, dir: &Path) -> LabResult<()> {
        let path = dir.join("summary.txt");
        fs::write(&path, self.render()).map_err(|e| LabError::io(path, e))
    }
}

//! Parallel path execution with on-disk state.
//!
//! Each path appends its checkpoints to `<state>/path-XXXX.rec` as they are
//! produced. A later run with `resume` set reads those records back and
//! continues from the last frame, regenerating the Brownian increments from
//! the stored RNG cursor.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use snls_core::ensemble::EnsembleSpec;
use snls_core::record::ModelKind;
use snls_core::TrajectoryRecord;

use crate::error::{LabError, LabResult};
use crate::format::{read_record, RecordWriter};

/// How one batch of paths is executed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    pub workers: usize,
    /// Directory of per-path state files.
    pub state_dir: PathBuf,
    /// Continue from records found in `state_dir`.
    pub resume: bool,
    /// Stop every path at its first checkpoint at or beyond this time.
    pub halt_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathResult<T> {
    Done(T),
    Halted,
    /// Runtime failure, with the path and seed in the message.
    Aborted(String),
}

pub fn state_file(dir: &Path, path: usize) -> PathBuf {
    dir.join(format!("path-{path:04}.rec"))
}

pub fn pool(workers: usize) -> LabResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::config("ensemble.workers", format!("cannot start {workers} workers: {e}")))
}

fn check_resumable(file: &Path, spec: &EnsembleSpec, path: usize, rec: &TrajectoryRecord) -> LabResult<()> {
    let m = &rec.meta;
    let mismatch = if m.model != ModelKind::Snls {
        Some("model")
    } else if m.grid != spec.grid {
        Some("grid")
    } else if m.dt != spec.dt {
        Some("dt")
    } else if m.gamma != spec.gamma {
        Some("gamma")
    } else if m.potential != spec.potential {
        Some("potential")
    } else if m.dealias != spec.dealias {
        Some("dealias")
    } else if m.stream != Some(spec.stream(path)) {
        Some("seed/path stream")
    } else if rec.convolution.is_some() != spec.maximal {
        Some("convolution ledger")
    } else {
        None
    };
    match mismatch {
        Some(what) => Err(LabError::format(file, format!("saved {what} does not match the configuration"))),
        None => Ok(()),
    }
}

fn abort_message(spec: &EnsembleSpec, path: usize, e: impl std::fmt::Display) -> String {
    let key = spec.stream(path);
    format!("path {path} (seed {}, stream {}) aborted: {e}", key.seed, key.path)
}

/// Runs (or continues) one path and hands its finished record to `finish`.
pub fn run_path<T>(
    spec: &EnsembleSpec,
    path: usize,
    opts: &ExecOptions,
    finish: &(dyn Fn(usize, &TrajectoryRecord) -> LabResult<T> + Sync),
) -> LabResult<PathResult<T>> {
    let file = state_file(&opts.state_dir, path);
    let (mut evo, mut writer) = if opts.resume && file.exists() {
        let rec = read_record(&file)?;
        check_resumable(&file, spec, path, &rec)?;
        let frames = rec.len();
        let evo = spec
            .resume_evolution(path, rec)
            .map_err(|e| LabError::format(&file, format!("cannot continue record: {e}")))?;
        (evo, RecordWriter::append_to(&file, frames)?)
    } else {
        let evo = match spec.evolution(path) {
            Ok(evo) => evo,
            Err(e) => return Ok(PathResult::Aborted(abort_message(spec, path, e))),
        };
        let writer = RecordWriter::create(&file, evo.record())?;
        (evo, writer)
    };
    let tol = 1e-9 * spec.horizon.max(1.0);
    while !evo.is_finished() {
        if let Some(h) = opts.halt_after {
            if evo.time() >= h - tol {
                return Ok(PathResult::Halted);
            }
        }
        if let Err(e) = evo.advance() {
            return Ok(PathResult::Aborted(abort_message(spec, path, e)));
        }
        writer.append_new(evo.record())?;
    }
    let rec = evo.into_record();
    match finish(path, &rec) {
        Ok(v) => Ok(PathResult::Done(v)),
        Err(LabError::Core(e)) => Ok(PathResult::Aborted(abort_message(spec, path, e))),
        Err(e) => Err(e),
    }
}

/// All paths of `spec`, in path order regardless of scheduling.
pub fn run_paths<T: Send>(
    spec: &EnsembleSpec,
    opts: &ExecOptions,
    finish: &(dyn Fn(usize, &TrajectoryRecord) -> LabResult<T> + Sync),
) -> LabResult<Vec<PathResult<T>>> {
    spec.validate()?;
    fs::create_dir_all(&opts.state_dir).map_err(|e| LabError::io(&opts.state_dir, e))?;
    let pool = pool(opts.workers)?;
    let results: Vec<LabResult<PathResult<T>>> =
        pool.install(|| (0..spec.paths).into_par_iter().map(|p| run_path(spec, p, opts, finish)).collect());
    results.into_iter().collect()
}

//! The preset studies behind `snls-lab run`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use snls_core::diagnostics::{
    burkholder_ratio, dissipation_ledger_check, duhamel_residual, scattering_residual, BurkholderEstimate,
};
use snls_core::ensemble::{aggregate, omega_moment, omega_moment_stderr, EnsembleSpec, PathDiagnostics, PathOutcome};
use snls_core::flows::{evolve, DampedNlsStepper, DampingSpec, FlowParams};
use snls_core::spectral::{dispersive_decay_profile, fitted_decay_exponent};
use snls_core::stochastic::{BrownianPath, NoiseSpec, SnlsStepper, StreamKey};
use snls_core::{ComplexField, TrajectoryRecord};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{LabError, LabResult};
use crate::report::{
    ensemble_header, ensemble_rows, fmt_f64, moment_header, moment_rows, write_csv, write_ledger, Check, Prefix,
    Summary,
};
use crate::runner::{pool, run_paths, ExecOptions, PathResult};

pub const MASS_DRIFT_TOL: f64 = 1e-9;
pub const DISSIPATION_TOL: f64 = 1e-4;
pub const DISSIPATION_RATIO: (f64, f64) = (3.3, 4.7);
pub const DISPERSIVE_REL_TOL: f64 = 0.01;
pub const DECAY_EXPONENT_REL_TOL: f64 = 0.10;
/// Mass fraction in the outer band `|x_i| ≥ 0.45 L` above which the box is
/// reported as too small.
pub const BOUNDARY_WARN: f64 = 1e-3;
pub const SELF_CONVERGENCE_MIN: f64 = 1.7;
pub const DUHAMEL_TOL: f64 = 5e-3;
pub const DUHAMEL_RATIO_MIN: f64 = 1.7;
pub const BURKHOLDER_MAX: f64 = 4.5;
pub const SCATTERING_DECAY: f64 = 0.2;
/// Cauchy increments are required to decrease from this time on.
pub const CAUCHY_FROM: f64 = 2.0;

/// Where and how a preset runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    /// Continue the partial run stored in `out`.
    pub resume: bool,
    pub halt_after: Option<f64>,
}

fn mkdir(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

fn check_resume_config(cfg: &ExperimentConfig, out: &Path) -> LabResult<()> {
    let file = out.join("resolved.config");
    let text = fs::read_to_string(&file).map_err(|e| LabError::io(&file, e))?;
    let mut saved = ExperimentConfig::parse(&text).map_err(|e| LabError::format(&file, e.to_string()))?;
    saved.workers = cfg.workers;
    saved.output_dir = cfg.output_dir.clone();
    if saved != *cfg {
        let mine = cfg.to_string();
        let key = saved
            .to_string()
            .lines()
            .zip(mine.lines())
            .find(|(a, b)| a != b)
            .map(|(a, _)| a.split('=').next().unwrap_or("").to_string())
            .unwrap_or_default();
        return Err(LabError::format(
            &file,
            format!("saved run differs from the requested configuration at `{key}`"),
        ));
    }
    Ok(())
}

/// Runs the preset named by `cfg.experiment`, writes `resolved.config`, its
/// CSVs and `summary.txt` under `opts.out`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> LabResult<Summary> {
    mkdir(&opts.out)?;
    if opts.halt_after.is_some() && !cfg.experiment.is_ensemble() {
        return Err(LabError::config(
            "--halt-after",
            format!("{} keeps no resumable state; it reruns from scratch", cfg.experiment),
        ));
    }
    if opts.resume {
        check_resume_config(cfg, &opts.out)?;
    }
    let resolved = opts.out.join("resolved.config");
    fs::write(&resolved, cfg.to_string()).map_err(|e| LabError::io(&resolved, e))?;
    let summary = match cfg.experiment {
        ExperimentKind::MassCheck => mass_check(cfg, opts)?,
        ExperimentKind::DissipationCheck => dissipation_check(cfg, &opts.out)?,
        ExperimentKind::DispersiveCheck => dispersive_check(cfg, &opts.out)?,
        ExperimentKind::DuhamelCheck => duhamel_check(cfg, &opts.out)?,
        ExperimentKind::GammaSweep => gamma_sweep(cfg, opts)?,
        ExperimentKind::ScatteringStudy => scattering_study(cfg, opts)?,
        ExperimentKind::BurkholderCheck => burkholder_check(cfg, opts)?,
    };
    summary.write(&opts.out)?;
    Ok(summary)
}

fn exec(opts: &RunOptions, state: &Path) -> ExecOptions {
    ExecOptions {
        workers: opts.workers,
        state_dir: state.to_path_buf(),
        resume: opts.resume,
        halt_after: opts.halt_after,
    }
}

/// Splits runner results into finished values, recording aborts and halts.
fn collect<T>(results: Vec<PathResult<T>>, summary: &mut Summary, halt: Option<f64>) -> Vec<(usize, T)> {
    let mut done = Vec::new();
    for (p, r) in results.into_iter().enumerate() {
        match r {
            PathResult::Done(v) => done.push((p, v)),
            PathResult::Halted => summary.halted_at = halt,
            PathResult::Aborted(msg) => summary.aborts.push(msg),
        }
    }
    done
}

/// Outcomes for every path, aborted ones carrying their message.
fn outcomes(spec: &EnsembleSpec, done: &[(usize, PathOutcome)], summary: &mut Summary) -> Vec<PathOutcome> {
    let mut all: Vec<PathOutcome> = done.iter().map(|(_, o)| o.clone()).collect();
    for o in &all {
        if let Err(e) = &o.result {
            let key = o.stream;
            summary
                .aborts
                .push(format!("path {} (seed {}, stream {}) diagnostics failed: {e}", o.path, key.seed, key.path));
        }
    }
    for p in 0..spec.paths {
        if !done.iter().any(|(q, _)| *q == p) {
            all.push(PathOutcome {
                path: p,
                stream: spec.stream(p),
                result: Err("aborted".into()),
            });
        }
    }
    all
}

fn write_ensemble(out: &Path, spec: &EnsembleSpec, outs: Vec<PathOutcome>) -> LabResult<()> {
    let report = aggregate(spec, outs)?;
    let none: Prefix = Vec::new();
    write_csv(&out.join("ensemble.csv"), &ensemble_header(spec, &none), ensemble_rows(spec, &report, &none))?;
    write_csv(&out.join("moments.csv"), &moment_header(&none), moment_rows(&report, &none))
}

fn ledger_file(dir: &Path, path: usize) -> PathBuf {
    dir.join(format!("path-{path:04}.csv"))
}

fn m0_curve(o: &PathOutcome) -> Option<&[f64]> {
    o.result.as_ref().ok().and_then(|d| d.m0_curve.as_deref())
}

fn completed(outs: &[PathOutcome]) -> Vec<&PathDiagnostics> {
    outs.iter().filter_map(|o| o.result.as_ref().ok()).collect()
}

fn mass_check(cfg: &ExperimentConfig, opts: &RunOptions) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let spec = cfg.ensemble(cfg.gamma);
    let ledgers = opts.out.join("paths");
    mkdir(&ledgers)?;
    let finish = |p: usize, rec: &TrajectoryRecord| -> LabResult<PathOutcome> {
        let outcome = spec.diagnose(p, rec);
        write_ledger(&ledger_file(&ledgers, p), rec, spec.pair, m0_curve(&outcome))?;
        Ok(outcome)
    };
    let results = run_paths(&spec, &exec(opts, &opts.out.join("state")), &finish)?;
    let done = collect(results, &mut summary, opts.halt_after);
    if summary.halted_at.is_some() {
        return Ok(summary);
    }
    let outs = outcomes(&spec, &done, &mut summary);
    let ok = completed(&outs);
    let drift = ok.iter().map(|d| d.mass_drift).fold(0.0, f64::max);
    summary.check(Check::new(
        "mass conservation",
        !ok.is_empty() && drift <= MASS_DRIFT_TOL,
        format!(
            "max relative mass drift {} over {} paths and all checkpoints (tolerance {MASS_DRIFT_TOL:e})",
            fmt_f64(drift),
            ok.len()
        ),
    ));
    write_ensemble(&opts.out, &spec, outs)?;
    Ok(summary)
}

fn damped_run(cfg: &ExperimentConfig, dt: f64) -> LabResult<TrajectoryRecord> {
    let grid = cfg.grid();
    let params = FlowParams::new(grid, dt)?.with_dealiasing(cfg.dealias);
    let damping = DampingSpec::new(&grid, cfg.potential(), cfg.gamma)?;
    let u0 = cfg.ensemble(cfg.gamma).initial_field(0);
    Ok(evolve(&u0, DampedNlsStepper::new(params, damping), cfg.horizon, &cfg.checkpoints())?)
}

fn dissipation_check(cfg: &ExperimentConfig, out: &Path) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let coarse = damped_run(cfg, cfg.dt)?;
    let fine = damped_run(cfg, 0.5 * cfg.dt)?;
    write_ledger(&out.join("ledger-dt.csv"), &coarse, cfg.pair, None)?;
    write_ledger(&out.join("ledger-half-dt.csv"), &fine, cfg.pair, None)?;
    let r0 = dissipation_ledger_check(&coarse)?;
    let r1 = dissipation_ledger_check(&fine)?;
    let ratio = r0 / r1;
    write_csv(
        &out.join("dissipation.csv"),
        &["dt".into(), "balance_residual".into()],
        [vec![fmt_f64(cfg.dt), fmt_f64(r0)], vec![fmt_f64(0.5 * cfg.dt), fmt_f64(r1)]],
    )?;
    summary.check(Check::new(
        "dissipation balance",
        r0 <= DISSIPATION_TOL,
        format!("residual {} at dt = {} (tolerance {DISSIPATION_TOL:e})", fmt_f64(r0), cfg.dt),
    ));
    let (lo, hi) = DISSIPATION_RATIO;
    summary.check(Check::new(
        "dissipation second order",
        (lo..=hi).contains(&ratio),
        format!("residual ratio {} under dt halving (required in [{lo}, {hi}])", fmt_f64(ratio)),
    ));
    Ok(summary)
}

/// Mass fraction with some coordinate in the outer band `|x_i| ≥ 0.45 L`.
pub fn edge_mass_fraction(u: &ComplexField) -> f64 {
    let grid = *u.grid();
    let edge = 0.45 * grid.extent();
    let d = grid.dim();
    let outer = grid.sample(|x| x[..d].iter().any(|c| c.abs() >= edge));
    let total = u.mass();
    if total == 0.0 {
        return 0.0;
    }
    let band: f64 = u
        .values()
        .iter()
        .zip(outer)
        .filter(|(_, o)| *o)
        .map(|(v, _)| v.norm_sqr())
        .sum::<f64>()
        * grid.cell_volume();
    band / total
}

/// `t^{d/2} A (1 + 4t²/w⁴)^{−d/4}`: scaled sup norm of a free Gaussian.
pub fn gaussian_scaled_sup(amplitude: f64, width: f64, dim: usize, t: f64) -> f64 {
    let d = dim as f64;
    t.powf(0.5 * d) * amplitude * (1.0 + 4.0 * t * t / width.powi(4)).powf(-0.25 * d)
}

fn dispersive_check(cfg: &ExperimentConfig, out: &Path) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let u0 = ComplexField::gaussian(cfg.grid(), cfg.init_amplitude, cfg.init_width);
    let profile = dispersive_decay_profile(&u0, &cfg.dispersive_times)?;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for s in &profile {
        let oracle = gaussian_scaled_sup(cfg.init_amplitude, cfg.init_width, cfg.dim, s.time);
        let rel = (s.scaled - oracle).abs() / oracle;
        worst = worst.max(rel);
        rows.push(vec![fmt_f64(s.time), fmt_f64(s.sup_norm), fmt_f64(s.scaled), fmt_f64(oracle), fmt_f64(rel)]);
    }
    write_csv(
        &out.join("dispersive.csv"),
        &["time", "sup_norm", "scaled", "oracle_scaled", "relative_error"].map(String::from),
        rows,
    )?;
    let t_last = *cfg.dispersive_times.last().unwrap();
    let edge = edge_mass_fraction(&snls_core::spectral::free_propagate(&u0, t_last)?);
    if edge > BOUNDARY_WARN {
        let msg = format!(
            "box too small: mass fraction {} within 0.05 L of the boundary at t = {t_last} (threshold {BOUNDARY_WARN:e}); periodic wrap-around affects the profile",
            fmt_f64(edge)
        );
        eprintln!("warning: {msg}");
        summary.warnings.push(msg);
    }
    if cfg.dim == 1 {
        summary.check(Check::new(
            "dispersive decay vs Gaussian oracle",
            worst <= DISPERSIVE_REL_TOL,
            format!(
                "max relative error of t^(1/2) sup|u| {} over t in [{}, {t_last}] (tolerance {DISPERSIVE_REL_TOL})",
                fmt_f64(worst),
                cfg.dispersive_times[0]
            ),
        ));
    } else {
        summary.check(Check::report(
            "dispersive decay vs Gaussian oracle",
            format!("max relative error {}", fmt_f64(worst)),
        ));
        let slope = fitted_decay_exponent(&profile);
        let target = 0.5 * cfg.dim as f64;
        summary.check(Check::new(
            "fitted decay exponent",
            (slope - target).abs() <= DECAY_EXPONENT_REL_TOL * target,
            format!("fitted exponent {} vs {target} (relative tolerance {DECAY_EXPONENT_REL_TOL})", fmt_f64(slope)),
        ));
    }
    Ok(summary)
}

fn snls_run(cfg: &ExperimentConfig, path: BrownianPath, checkpoints: &[f64], track: bool) -> LabResult<TrajectoryRecord> {
    let grid = cfg.grid();
    let params = FlowParams::new(grid, path.dt())?.with_dealiasing(cfg.dealias);
    let noise = NoiseSpec::new(&grid, cfg.potential(), cfg.gamma)?;
    let mut stepper = SnlsStepper::new(params, noise, path)?;
    if track {
        stepper = stepper.tracking_convolution()?;
    }
    let u0 = cfg.ensemble(cfg.gamma).initial_field(0);
    Ok(evolve(&u0, stepper, cfg.horizon, checkpoints)?)
}

fn duhamel_check(cfg: &ExperimentConfig, out: &Path) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let key = StreamKey::new(cfg.seed, 0);
    let finest = BrownianPath::sample(key, 0.25 * cfg.dt, cfg.horizon)?;
    let mid = finest.coarsen(2)?;
    let coarse = finest.coarsen(4)?;
    let abort = |e: LabError| format!("path 0 (seed {}, stream 0) aborted: {e}", cfg.seed);
    let finals: Result<Vec<ComplexField>, String> = [coarse.clone(), mid.clone(), finest]
        .into_iter()
        .map(|p| {
            snls_run(cfg, p, &[cfg.horizon], false)
                .map(|r| r.fields.last().unwrap().clone())
                .map_err(abort)
        })
        .collect();
    let finals = match finals {
        Ok(f) => f,
        Err(msg) => {
            summary.aborts.push(msg);
            return Ok(summary);
        }
    };
    let d01 = finals[0].l2_distance(&finals[1])?;
    let d12 = finals[1].l2_distance(&finals[2])?;
    let ratio = d01 / d12;
    summary.check(Check::new(
        "strong self-convergence",
        ratio >= SELF_CONVERGENCE_MIN,
        format!(
            "|u_dt - u_dt/2| = {}, |u_dt/2 - u_dt/4| = {}, ratio {} (required >= {SELF_CONVERGENCE_MIN})",
            fmt_f64(d01),
            fmt_f64(d12),
            fmt_f64(ratio)
        ),
    ));

    let every = |dt: f64| -> Vec<f64> {
        let n = (cfg.horizon / dt).round() as usize;
        (1..=n).map(|i| i as f64 * dt).collect()
    };
    let mut residuals = Vec::new();
    for p in [coarse, mid] {
        let dt = p.dt();
        let rec = match snls_run(cfg, p, &every(dt), true) {
            Ok(r) => r,
            Err(e) => {
                summary.aborts.push(abort(e));
                return Ok(summary);
            }
        };
        residuals.push((dt, duhamel_residual(&rec, (0.0, cfg.horizon))?));
    }
    let (r0, r1) = (residuals[0].1, residuals[1].1);
    summary.check(Check::new(
        "Duhamel residual",
        r0 <= DUHAMEL_TOL,
        format!("residual {} at T = {}, dt = {} (tolerance {DUHAMEL_TOL:e})", fmt_f64(r0), cfg.horizon, cfg.dt),
    ));
    summary.check(Check::new(
        "Duhamel residual order",
        r0 / r1 >= DUHAMEL_RATIO_MIN,
        format!("residual ratio {} under dt halving (required >= {DUHAMEL_RATIO_MIN})", fmt_f64(r0 / r1)),
    ));
    let mut rows = vec![
        vec!["self_convergence".into(), fmt_f64(cfg.dt), fmt_f64(d01)],
        vec!["self_convergence".into(), fmt_f64(0.5 * cfg.dt), fmt_f64(d12)],
    ];
    rows.extend(residuals.iter().map(|(dt, r)| vec!["duhamel_residual".into(), fmt_f64(*dt), fmt_f64(*r)]));
    write_csv(&out.join("convergence.csv"), &["quantity", "dt", "value"].map(String::from), rows)?;
    Ok(summary)
}

/// The record cut at checkpoint time `t`.
pub fn truncate_record(rec: &TrajectoryRecord, t: f64) -> Option<TrajectoryRecord> {
    let k = rec.checkpoint_at(t)?;
    let mut r = rec.clone();
    r.steps.truncate(k + 1);
    r.fields.truncate(k + 1);
    r.mass.truncate(k + 1);
    if let Some(d) = r.dissipation.as_mut() {
        d.truncate(k + 1);
    }
    if let Some(c) = r.convolution.as_mut() {
        c.ito.truncate(k);
        c.milstein.truncate(k);
    }
    r.meta.rng_cursor = None;
    r.meta.brownian_value = None;
    Some(r)
}

fn sweep_spec(cfg: &ExperimentConfig, gamma: f64) -> EnsembleSpec {
    let mut spec = cfg.ensemble(gamma);
    let alpha = cfg.pair.time.value();
    if !spec.rhos.contains(&alpha) {
        spec.rhos.push(alpha);
    }
    spec.probe_times.clear();
    spec
}

fn moment_with_se(values: &[f64], rho: f64) -> (f64, f64) {
    match omega_moment(values, rho) {
        Ok(m) => (m, omega_moment_stderr(values, rho)),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

fn gamma_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let mut horizons = cfg.sweep_horizons.clone();
    horizons.sort_by(f64::total_cmp);
    let alpha = cfg.pair.time.value();
    let (mut ens_rows, mut mom_rows, mut sweep_rows) = (Vec::new(), Vec::new(), Vec::new());
    let mut header = None;
    // (gamma, tail moment, stderr) at the final horizon
    let mut finals = Vec::new();
    for (gi, &gamma) in cfg.sweep_gammas.iter().enumerate() {
        let spec = sweep_spec(cfg, gamma);
        let ledgers = opts.out.join("paths").join(format!("gamma-{gi}"));
        mkdir(&ledgers)?;
        let finish = |p: usize, rec: &TrajectoryRecord| -> LabResult<Vec<PathOutcome>> {
            let per: Vec<PathOutcome> = horizons
                .iter()
                .map(|&h| {
                    let cut = truncate_record(rec, h).expect("validated sweep horizon");
                    spec.diagnose(p, &cut)
                })
                .collect();
            let full = per.last().filter(|_| rec.checkpoint_at(*horizons.last().unwrap()) == Some(rec.len() - 1));
            write_ledger(&ledger_file(&ledgers, p), rec, spec.pair, full.and_then(m0_curve))?;
            Ok(per)
        };
        let state = opts.out.join("state").join(format!("gamma-{gi}"));
        let results = run_paths(&spec, &exec(opts, &state), &finish)?;
        let done = collect(results, &mut summary, opts.halt_after);
        if summary.halted_at.is_some() {
            continue;
        }
        for (hi, &h) in horizons.iter().enumerate() {
            let per: Vec<(usize, PathOutcome)> = done.iter().map(|(p, v)| (*p, v[hi].clone())).collect();
            let outs = outcomes(&spec, &per, &mut summary);
            let ok = completed(&outs);
            let strich: Vec<f64> = ok.iter().map(|d| d.strichartz).collect();
            let tail: Vec<f64> = ok.iter().map(|d| d.strichartz_tail).collect();
            let scat: Vec<f64> = ok.iter().map(|d| d.scattering_tail).collect();
            let (sm, sse) = moment_with_se(&strich, alpha);
            let (tm, tse) = moment_with_se(&tail, alpha);
            let (cm, cse) = moment_with_se(&scat, 1.0);
            sweep_rows.push(vec![
                fmt_f64(gamma),
                fmt_f64(h),
                ok.len().to_string(),
                fmt_f64(sm),
                fmt_f64(sse),
                fmt_f64(tm),
                fmt_f64(tse),
                fmt_f64(cm),
                fmt_f64(cse),
            ]);
            if hi + 1 == horizons.len() {
                finals.push((gamma, tm, tse));
            }
            let prefix: Prefix = vec![("gamma", fmt_f64(gamma)), ("horizon", fmt_f64(h))];
            let report = aggregate(&spec, outs)?;
            header.get_or_insert_with(|| (ensemble_header(&spec, &prefix), moment_header(&prefix)));
            ens_rows.extend(ensemble_rows(&spec, &report, &prefix));
            mom_rows.extend(moment_rows(&report, &prefix));
        }
        summary.aborts.dedup();
    }
    if summary.halted_at.is_some() {
        return Ok(summary);
    }
    let (eh, mh) = header.expect("at least one gamma");
    write_csv(&opts.out.join("ensemble.csv"), &eh, ens_rows)?;
    write_csv(&opts.out.join("moments.csv"), &mh, mom_rows)?;
    write_csv(
        &opts.out.join("sweep.csv"),
        &[
            "gamma",
            "horizon",
            "paths",
            "strichartz_moment",
            "strichartz_stderr",
            "tail_moment",
            "tail_stderr",
            "scattering_tail_mean",
            "scattering_tail_stderr",
        ]
        .map(String::from),
        sweep_rows,
    )?;

    let t = horizons.last().copied().unwrap_or(cfg.horizon);
    let mut positive: Vec<(f64, f64, f64)> = finals.iter().copied().filter(|(g, _, _)| *g > 0.0).collect();
    positive.sort_by(|a, b| b.0.total_cmp(&a.0));
    for w in positive.windows(2) {
        let ((g_hi, m_hi, se_hi), (g_lo, m_lo, se_lo)) = (w[0], w[1]);
        let slack = se_hi.max(se_lo);
        summary.check(Check::new(
            format!("gamma ordering {g_hi} vs {g_lo}"),
            m_hi <= m_lo + slack,
            format!(
                "windowed Strichartz moment on [{}, {t}]: {} (gamma {g_hi}) vs {} (gamma {g_lo}), slack one stderr {}",
                0.5 * t,
                fmt_f64(m_hi),
                fmt_f64(m_lo),
                fmt_f64(slack)
            ),
        ));
    }
    for (g, m, se) in finals.iter().filter(|(g, _, _)| *g == 0.0) {
        summary.check(Check::report(
            format!("gamma {g}"),
            format!("windowed Strichartz moment on [{}, {t}]: {} +/- {}", 0.5 * t, fmt_f64(*m), fmt_f64(*se)),
        ));
    }
    Ok(summary)
}

/// Per-path scattering output: diagnostics and `(t_k, c_k, residual_k)`.
type ScatteringPath = (PathOutcome, Vec<(f64, f64, f64)>);

fn decreasing_from(points: &[(f64, f64, f64)], from: f64) -> bool {
    let c: Vec<f64> = points
        .iter()
        .filter(|(t, c, _)| *t >= from - 1e-9 && !c.is_nan())
        .map(|(_, c, _)| *c)
        .collect();
    c.windows(2).all(|w| w[1] < w[0])
}

fn scattering_study(cfg: &ExperimentConfig, opts: &RunOptions) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let spec = cfg.ensemble(cfg.gamma);
    let ledgers = opts.out.join("paths");
    mkdir(&ledgers)?;
    let finish = |p: usize, rec: &TrajectoryRecord| -> LabResult<ScatteringPath> {
        let outcome = spec.diagnose(p, rec);
        write_ledger(&ledger_file(&ledgers, p), rec, spec.pair, m0_curve(&outcome))?;
        let pts = scattering_residual(rec)?
            .points
            .iter()
            .map(|s| (s.time, s.cauchy_increment.unwrap_or(f64::NAN), s.residual))
            .collect();
        Ok((outcome, pts))
    };
    let results = run_paths(&spec, &exec(opts, &opts.out.join("state")), &finish)?;
    let done = collect(results, &mut summary, opts.halt_after);
    if summary.halted_at.is_some() {
        return Ok(summary);
    }
    let mut rows = Vec::new();
    for (p, (_, pts)) in &done {
        for (t, c, r) in pts {
            rows.push(vec![p.to_string(), fmt_f64(*t), fmt_f64(*c), fmt_f64(*r)]);
        }
    }
    write_csv(
        &opts.out.join("scattering.csv"),
        &["path", "time", "cauchy_increment", "residual"].map(String::from),
        rows,
    )?;
    let monotone = done.iter().filter(|(_, (_, pts))| decreasing_from(pts, CAUCHY_FROM)).count();
    let per: Vec<(usize, PathOutcome)> = done.iter().map(|(p, (o, _))| (*p, o.clone())).collect();
    let outs = outcomes(&spec, &per, &mut summary);
    let ok = completed(&outs);
    let (t0, t1) = (cfg.probes[0], *cfg.probes.last().unwrap());
    let mean = |i: usize| ok.iter().map(|d| d.probes[i]).sum::<f64>() / ok.len() as f64;
    let (early, late) = (mean(0), mean(cfg.probes.len() - 1));
    let ratio = late / early;
    summary.check(Check::new(
        "scattering residual decay",
        !ok.is_empty() && ratio <= SCATTERING_DECAY,
        format!(
            "ensemble-mean residual {} at t = {t1} vs {} at t = {t0}: ratio {} (required <= {SCATTERING_DECAY}); u+ taken at T = {}",
            fmt_f64(late),
            fmt_f64(early),
            fmt_f64(ratio),
            cfg.horizon
        ),
    ));
    let need = (7 * cfg.paths).div_ceil(8);
    summary.check(Check::new(
        "Cauchy increments decreasing",
        monotone >= need,
        format!("c_k strictly decreasing for t_k >= {CAUCHY_FROM} in {monotone} of {} paths (required {need})", cfg.paths),
    ));
    write_ensemble(&opts.out, &spec, outs)?;
    Ok(summary)
}

fn burkholder_check(cfg: &ExperimentConfig, opts: &RunOptions) -> LabResult<Summary> {
    let mut summary = Summary::new(cfg.experiment.name());
    let pool = pool(opts.workers)?;
    let mut rows = Vec::new();
    for r in 0..cfg.burkholder_repeats {
        let seed = cfg.seed + r as u64;
        let paths: Vec<BrownianPath> = pool.install(|| {
            (0..cfg.paths)
                .into_par_iter()
                .map(|i| BrownianPath::sample(StreamKey::new(seed, i as u64), cfg.dt, cfg.horizon))
                .collect::<Result<_, _>>()
        })?;
        for &rho in &cfg.rhos {
            let BurkholderEstimate {
                lhs,
                rhs,
                ratio,
                ratio_sq_stderr,
                ..
            } = burkholder_ratio(&paths, rho, |_, _| 1.0)?;
            let sq = ratio * ratio;
            rows.push(vec![
                seed.to_string(),
                fmt_f64(rho),
                fmt_f64(lhs),
                fmt_f64(rhs),
                fmt_f64(ratio),
                fmt_f64(sq),
                fmt_f64(ratio_sq_stderr),
            ]);
            let detail = format!(
                "seed {seed}, rho {rho}: (LHS/RHS)^2 = {} +/- {}",
                fmt_f64(sq),
                fmt_f64(ratio_sq_stderr)
            );
            if rho == 2.0 {
                summary.check(Check::new(
                    format!("Burkholder ratio seed {seed}"),
                    sq <= BURKHOLDER_MAX,
                    format!("{detail} (required <= {BURKHOLDER_MAX})"),
                ));
            } else {
                summary.check(Check::report(format!("Burkholder ratio seed {seed} rho {rho}"), detail));
            }
        }
    }
    write_csv(
        &opts.out.join("burkholder.csv"),
        &["seed", "rho", "lhs", "rhs", "ratio", "ratio_sq", "ratio_sq_stderr"].map(String::from),
        rows,
    )?;
    Ok(summary)
}

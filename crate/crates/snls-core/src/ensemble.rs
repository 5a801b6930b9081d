//! Monte Carlo layer: per-path SNLS runs, their scalar diagnostics and the
//! `L_ω^ρ` moments over the uniform measure on paths.
//!
//! Everything here is a pure function of `(spec, path index)`; the parallel
//! fan-out lives in the companion crate and only has to sort by index.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{self, Exponent, StrichartzPair};
use crate::field::ComplexField;
use crate::flows::{checkpoint_schedule, Evolution, FlowParams, Potential};
use crate::grid::SpatialGrid;
use crate::record::TrajectoryRecord;
use crate::stochastic::{BrownianPath, NoiseSpec, SnlsStepper, StreamKey};
use crate::{Error, Result};

/// `((1/P) Σ v_i^ρ)^{1/ρ}`, or `max v_i` for `ρ = ∞`.
pub fn omega_moment(values: &[f64], rho: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("per-path values"));
    }
    if !(rho >= 1.0) {
        return Err(Error::param("rho", format!("moment exponent must be >= 1 (got {rho})")));
    }
    if rho.is_infinite() {
        return Ok(values.iter().copied().fold(0.0, f64::max));
    }
    let n = values.len() as f64;
    Ok((values.iter().map(|v| v.abs().powf(rho)).sum::<f64>() / n).powf(1.0 / rho))
}

/// Delta-method standard error of [`omega_moment`]; zero for `ρ = ∞` or a
/// single path.
pub fn omega_moment_stderr(values: &[f64], rho: f64) -> f64 {
    let n = values.len();
    if n < 2 || rho.is_infinite() {
        return 0.0;
    }
    let pw: Vec<f64> = values.iter().map(|v| v.abs().powf(rho)).collect();
    let m = pw.iter().sum::<f64>() / n as f64;
    if m == 0.0 {
        return 0.0;
    }
    let var = pw.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
    (1.0 / rho) * m.powf(1.0 / rho - 1.0) * (var / n as f64).sqrt()
}

/// Shared initial data `amplitude · e^{−|x|²/(2w²)}`, optionally rescaled to
/// a given `L²` norm and optionally given a per-path random phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    pub amplitude: f64,
    pub width: f64,
    /// Target `‖u₀‖₂`; overrides the amplitude when set.
    pub l2_norm: Option<f64>,
    /// Random smooth phase per path (mass unchanged, so uniformly bounded).
    pub random_phase: bool,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            amplitude: 1.0,
            width: 1.0,
            l2_norm: None,
            random_phase: false,
        }
    }
}

impl InitialData {
    pub fn field(&self, grid: SpatialGrid, key: StreamKey) -> ComplexField {
        let mut u = ComplexField::gaussian(grid, self.amplitude, self.width);
        if let Some(target) = self.l2_norm {
            let m = u.lp_norm_unchecked(2.0);
            if m > 0.0 {
                u.scale(Complex64::new(target / m, 0.0));
            }
        }
        if self.random_phase {
            // stream 2^63 + path keeps phases disjoint from Brownian streams
            let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
            rng.set_stream((1u64 << 63) | key.path);
            let coeffs: [f64; 6] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let l = grid.extent();
            let phase = grid.sample(|x| {
                let mut p = 0.0;
                for (a, c) in coeffs.chunks(2).enumerate() {
                    let k = 2.0 * core::f64::consts::PI * (a + 1) as f64 / l;
                    p += c[0] * (k * x[0]).cos() + c[1] * (k * (x[1] + x[2])).sin();
                }
                p
            });
            for (v, p) in u.values_mut().iter_mut().zip(phase) {
                let (s, c) = p.sin_cos();
                *v *= Complex64::new(c, s);
            }
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub paths: usize,
    pub master_seed: u64,
    /// Moment exponents in `[1, ∞]`.
    pub rhos: Vec<f64>,
    pub grid: SpatialGrid,
    pub dt: f64,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub potential: Potential,
    pub gamma: f64,
    pub initial: InitialData,
    pub pair: StrichartzPair,
    /// Compute the `M₀` maximal function (O(K²) propagations per path).
    pub maximal: bool,
    /// Times at which per-path scattering residuals are reported.
    pub probe_times: Vec<f64>,
    pub dealias: bool,
    /// Parallel workers; does not affect results.
    pub workers: usize,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::param("ensemble.paths", "at least one path is required"));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r >= 1.0)) {
            return Err(Error::param("ensemble.rho", format!("moments must be >= 1 (got {r})")));
        }
        if !self.pair.is_admissible(self.grid.dim()) {
            return Err(Error::param(
                "strichartz.pair",
                format!("({}, {}) is not admissible in d = {}", self.pair.time, self.pair.space, self.grid.dim()),
            ));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::param("noise.gamma", format!("must be >= 0 (got {})", self.gamma)));
        }
        self.potential.validate()?;
        FlowParams::new(self.grid, self.dt)?;
        self.schedule()?;
        if !(self.horizon >= self.dt) {
            return Err(Error::param("flow.horizon", "horizon must be at least one step"));
        }
        for &t in &self.probe_times {
            if !(0.0..=self.horizon).contains(&t) || self.schedule_index(t).is_none() {
                return Err(Error::param("ensemble.probes", format!("probe time {t} is not a checkpoint")));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<Vec<usize>> {
        checkpoint_schedule(self.dt, self.horizon, &self.checkpoints)
    }

    fn schedule_index(&self, t: f64) -> Option<usize> {
        let step = (t / self.dt).round() as usize;
        self.schedule().ok()?.binary_search(&step).ok()
    }

    pub fn stream(&self, path: usize) -> StreamKey {
        StreamKey::new(self.master_seed, path as u64)
    }

    pub fn initial_field(&self, path: usize) -> ComplexField {
        self.initial.field(self.grid, self.stream(path))
    }

    /// Stepper for path `path`, with its Brownian increments regenerated from
    /// step `first_step` (cursor and `B` taken from a saved record).
    pub fn stepper(&self, path: usize, resume: Option<(usize, u64, f64)>) -> Result<SnlsStepper> {
        let params = FlowParams::new(self.grid, self.dt)?.with_dealiasing(self.dealias);
        let noise = NoiseSpec::new(&self.grid, self.potential, self.gamma)?;
        let (first, cursor, b) = resume.unwrap_or((0, 0, 0.0));
        let bm = BrownianPath::sample_from(self.stream(path), self.dt, self.horizon, first, cursor, b)?;
        let stepper = SnlsStepper::new(params, noise, bm)?;
        if self.maximal {
            stepper.tracking_convolution()
        } else {
            Ok(stepper)
        }
    }

    /// Fresh evolution for one path.
    pub fn evolution(&self, path: usize) -> Result<Evolution<SnlsStepper>> {
        Evolution::new(self.initial_field(path), self.stepper(path, None)?, self.schedule()?)
    }

    /// Continues a partial record of path `path`.
    pub fn resume_evolution(&self, path: usize, record: TrajectoryRecord) -> Result<Evolution<SnlsStepper>> {
        let step = *record.steps.last().ok_or(Error::Empty("record"))?;
        let cursor = record
            .meta
            .rng_cursor
            .ok_or(Error::MissingLedger("RNG cursor"))?;
        let b = record.meta.brownian_value.unwrap_or(0.0);
        let stepper = self.stepper(path, Some((step, cursor, b)))?;
        Evolution::resume(record, stepper, self.schedule()?)
    }

    /// Runs and diagnoses one path.
    pub fn run_path(&self, path: usize) -> PathOutcome {
        let stream = self.stream(path);
        match self.evolution(path).and_then(|e| e.run()) {
            Ok(rec) => self.diagnose(path, &rec),
            Err(e) => PathOutcome {
                path,
                stream,
                result: Err(format!("{e}")),
            },
        }
    }

    /// Scalar diagnostics of a finished path record.
    pub fn diagnose(&self, path: usize, rec: &TrajectoryRecord) -> PathOutcome {
        PathOutcome {
            path,
            stream: self.stream(path),
            result: self.diagnose_inner(rec).map_err(|e| format!("{e}")),
        }
    }

    fn diagnose_inner(&self, rec: &TrajectoryRecord) -> Result<PathDiagnostics> {
        let horizon = rec.time(rec.len() - 1);
        let strichartz = diagnostics::strichartz_time_norm(rec, self.pair, (0.0, horizon))?;
        let strichartz_tail = diagnostics::strichartz_time_norm(rec, self.pair, (0.5 * horizon, horizon))?;
        let scattering = diagnostics::scattering_residual(rec)?;
        let probes = self
            .probe_times
            .iter()
            .map(|&t| {
                let k = rec.checkpoint_at(t).ok_or(Error::param("ensemble.probes", "not a checkpoint"))?;
                Ok(scattering.points[k].residual)
            })
            .collect::<Result<Vec<_>>>()?;
        let (m0_max, m0_time_norm, m0_curve) = if self.maximal {
            let curve = diagnostics::maximal_curve(rec, self.pair.space.value())?;
            let vals: Vec<f64> = curve.iter().map(|m| m.value).collect();
            (
                vals.iter().copied().fold(0.0, f64::max),
                Some(diagnostics::scalar_time_norm(&rec.times(), &vals, self.pair.time)),
                Some(vals),
            )
        } else {
            (0.0, None, None)
        };
        let half = rec.checkpoint_at(0.5 * horizon);
        let scattering_tail = match half {
            Some(k) => scattering.points[k].residual,
            None => f64::NAN,
        };
        Ok(PathDiagnostics {
            mass_drift: diagnostics::mass_ledger_check(rec),
            strichartz,
            strichartz_tail,
            m0_max: self.maximal.then_some(m0_max),
            m0_time_norm,
            m0_curve,
            scattering_tail,
            probes,
        })
    }
}

/// Scalars of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDiagnostics {
    /// `max_k |m_k − m_0|/m_0`
    pub mass_drift: f64,
    /// `‖u‖_{L_t^α L_x^β([0,T])}`
    pub strichartz: f64,
    /// `‖u‖_{L_t^α L_x^β([T/2,T])}`
    pub strichartz_tail: f64,
    /// `max_t M₀(t)` with exponent `β`.
    pub m0_max: Option<f64>,
    /// `‖M₀‖_{L_t^α}` over checkpoints.
    pub m0_time_norm: Option<f64>,
    /// `M₀(t_k)` at every checkpoint.
    pub m0_curve: Option<Vec<f64>>,
    /// `‖v(T/2) − v(T)‖₂`, NaN when `T/2` is not a checkpoint.
    pub scattering_tail: f64,
    /// Scattering residual at each probe time.
    pub probes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub path: usize,
    pub stream: StreamKey,
    /// Diagnostics, or the abort message.
    pub result: core::result::Result<PathDiagnostics, String>,
}

/// One diagnostic column's moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub diagnostic: String,
    /// `(ρ, moment, stderr)` per requested exponent.
    pub values: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub paths: Vec<PathOutcome>,
    pub moments: Vec<MomentRow>,
    pub completed: usize,
    pub aborted: usize,
}

impl EnsembleReport {
    pub fn is_partial(&self) -> bool {
        self.aborted > 0
    }

    pub fn moment(&self, diagnostic: &str, rho: f64) -> Option<(f64, f64)> {
        let row = self.moments.iter().find(|r| r.diagnostic == diagnostic)?;
        row.values
            .iter()
            .find(|(r, _, _)| *r == rho || (r.is_infinite() && rho.is_infinite()))
            .map(|(_, m, s)| (*m, *s))
    }
}

/// Named per-path scalar columns, in report order.
pub fn diagnostic_columns(spec: &EnsembleSpec) -> Vec<String> {
    let mut cols: Vec<String> = ["mass_drift", "strichartz", "strichartz_tail", "scattering_tail"]
        .iter()
        .map(|s| String::from(*s))
        .collect();
    if spec.maximal {
        cols.push("m0_max".into());
        cols.push("m0_time_norm".into());
    }
    for t in &spec.probe_times {
        cols.push(format!("scattering_residual@{t}"));
    }
    cols
}

/// Values of [`diagnostic_columns`] for one path.
pub fn diagnostic_values(spec: &EnsembleSpec, d: &PathDiagnostics) -> Vec<f64> {
    let mut v = alloc::vec![d.mass_drift, d.strichartz, d.strichartz_tail, d.scattering_tail];
    if spec.maximal {
        v.push(d.m0_max.unwrap_or(f64::NAN));
        v.push(d.m0_time_norm.unwrap_or(f64::NAN));
    }
    v.extend_from_slice(&d.probes);
    v
}

/// Sorts outcomes by path index and forms the moment table over completed
/// paths.
pub fn aggregate(spec: &EnsembleSpec, mut outcomes: Vec<PathOutcome>) -> Result<EnsembleReport> {
    outcomes.sort_by_key(|o| o.path);
    let ok: Vec<Vec<f64>> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .map(|d| diagnostic_values(spec, d))
        .collect();
    let completed = ok.len();
    let aborted = outcomes.len() - completed;
    let mut moments = Vec::new();
    if completed > 0 {
        for (c, name) in diagnostic_columns(spec).into_iter().enumerate() {
            let col: Vec<f64> = ok.iter().map(|r| r[c]).collect();
            let values = spec
                .rhos
                .iter()
                .map(|&rho| Ok((rho, omega_moment(&col, rho)?, omega_moment_stderr(&col, rho))))
                .collect::<Result<Vec<_>>>()?;
            moments.push(MomentRow {
                diagnostic: name,
                values,
            });
        }
    }
    Ok(EnsembleReport {
        paths: outcomes,
        moments,
        completed,
        aborted,
    })
}

/// Sequential reference runner (no threads).
pub fn run_ensemble_sequential(spec: &EnsembleSpec) -> Result<EnsembleReport> {
    spec.validate()?;
    let outcomes = (0..spec.paths).map(|i| spec.run_path(i)).collect();
    aggregate(spec, outcomes)
}

/// `(14/d, 14/5)` with `ρ ∈ {1.5, 2, ∞}`, one path per worker by default.
pub fn default_exponents() -> (StrichartzPair, Vec<f64>) {
    (
        StrichartzPair::new(Exponent::ratio(14, 3), Exponent::ratio(14, 5)),
        alloc::vec![1.5, 2.0, f64::INFINITY],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::uniform_checkpoints;

    #[test]
    fn moment_examples() {
        assert!((omega_moment(&[3.0; 5], 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((omega_moment(&[3.0; 5], 7.5).unwrap() - 3.0).abs() < 1e-14);
        let mut v = alloc::vec![0.0; 16];
        v[15] = 1.0;
        assert_eq!(omega_moment(&v, f64::INFINITY).unwrap(), 1.0);
        assert!((omega_moment(&[1.0, 2.0], 2.0).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(omega_moment(&[], 2.0).is_err());
        assert!(omega_moment(&[1.0], 0.5).is_err());
    }

    fn small_spec(paths: usize) -> EnsembleSpec {
        let grid = SpatialGrid::new(1, 32.0, 64).unwrap();
        EnsembleSpec {
            paths,
            master_seed: 11,
            rhos: alloc::vec![1.0, 2.0, f64::INFINITY],
            grid,
            dt: 0.01,
            horizon: 1.0,
            checkpoints: uniform_checkpoints(0.25, 1.0),
            potential: Potential::default(),
            gamma: 0.5,
            initial: InitialData::default(),
            pair: StrichartzPair::default_for(1),
            maximal: true,
            probe_times: alloc::vec![0.5],
            dealias: false,
            workers: 1,
        }
    }

    #[test]
    fn single_path_moments_equal_values() {
        let spec = small_spec(1);
        let rep = run_ensemble_sequential(&spec).unwrap();
        let d = rep.paths[0].result.as_ref().unwrap();
        for row in &rep.moments {
            let c = diagnostic_columns(&spec).iter().position(|n| *n == row.diagnostic).unwrap();
            let v = diagnostic_values(&spec, d)[c];
            for (_, m, _) in &row.values {
                assert!((m - v).abs() <= 1e-12 * v.abs().max(1e-300), "{}", row.diagnostic);
            }
        }
    }

    #[test]
    fn zero_amplitude_paths_coincide() {
        let mut spec = small_spec(3);
        spec.potential = Potential::zero();
        let rep = run_ensemble_sequential(&spec).unwrap();
        let first = rep.paths[0].result.as_ref().unwrap();
        for p in &rep.paths {
            assert_eq!(p.result.as_ref().unwrap(), first);
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec(1);
        spec.paths = 0;
        assert!(spec.validate().is_err());
        let mut spec = small_spec(1);
        spec.pair = StrichartzPair::new(Exponent::integer(4), Exponent::integer(3));
        assert!(spec.validate().is_err());
        let mut spec = small_spec(1);
        spec.probe_times = alloc::vec![0.33];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn random_phase_keeps_mass() {
        let mut spec = small_spec(2);
        spec.initial.random_phase = true;
        spec.initial.l2_norm = Some(0.5);
        let a = spec.initial_field(0);
        let b = spec.initial_field(1);
        assert!((a.mass() - 0.25).abs() < 1e-12);
        assert!((b.mass() - 0.25).abs() < 1e-12);
        assert_ne!(a, b);
    }
}

//! Deterministic Strang-split flows: NLS, the damped linear propagator
//! `H(t,s)` and the damped NLS, plus the checkpointing driver.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::field::ComplexField;
use crate::grid::SpatialGrid;
use crate::record::{ConvolutionLedger, ConvolutionWeight, ModelKind, RunMeta, TrajectoryRecord};
use crate::spectral::{SpectralContext, SpectralMultiplier};
use crate::{Error, Result};

/// Fields larger than this abort the nonlinear substep.
pub const OVERFLOW_AMPLITUDE: f64 = 1e6;

/// Japanese bracket `⟨t⟩ = (1+t²)^{1/2}`.
pub fn japanese_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// `∫_{t0}^{t1} ⟨τ⟩^{−exponent} dτ` by two-point Gauss–Legendre.
pub fn envelope_integral(t0: f64, t1: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        return t1 - t0;
    }
    let mid = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    let off = half / 3f64.sqrt();
    let f = |t: f64| japanese_bracket(t).powf(-exponent);
    half * (f(mid - off) + f(mid + off))
}

/// Gaussian bump `V(x) = v₀ e^{−|x|²/(2w²)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub amplitude: f64,
    pub width: f64,
}

impl Default for Potential {
    fn default() -> Self {
        Potential {
            amplitude: 1.0,
            width: 1.0,
        }
    }
}

impl Potential {
    pub fn zero() -> Self {
        Potential {
            amplitude: 0.0,
            width: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::param("noise.v0", "amplitude must be finite"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::param("noise.width", "width must be positive"));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Vec<f64> {
        let w2 = self.width * self.width;
        let v0 = self.amplitude;
        grid.sample(|x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            v0 * (-0.5 * r2 / w2).exp()
        })
    }
}

/// Step size and grid shared by every stepper. `σ = 4/d`, defocusing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    grid: SpatialGrid,
    dt: f64,
    dealias: bool,
}

impl FlowParams {
    pub fn new(grid: SpatialGrid, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0 && dt <= 0.1) {
            return Err(Error::param("flow.dt", format!("time step must lie in (0, 0.1] (got {dt})")));
        }
        Ok(FlowParams {
            grid,
            dt,
            dealias: false,
        })
    }

    /// Projects onto the 2/3-rule band after each nonlinear substep. The
    /// truncated modes carry mass away, so filtered runs are not conservative.
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Mass-critical exponent `4/d`.
    pub fn sigma(&self) -> f64 {
        4.0 / self.grid.dim() as f64
    }
}

/// Damping coefficient `a(t, x) = strength · ⟨t⟩^{−2γ} V(x)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpec {
    potential: Potential,
    v_squared: Vec<f64>,
    gamma: f64,
    strength: f64,
}

impl DampingSpec {
    pub fn new(grid: &SpatialGrid, potential: Potential, gamma: f64) -> Result<Self> {
        potential.validate()?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::param("gamma", format!("decay exponent must be >= 0 (got {gamma})")));
        }
        let v_squared = potential.sample(grid).into_iter().map(|v| v * v).collect();
        Ok(DampingSpec {
            potential,
            v_squared,
            gamma,
            strength: 1.0,
        })
    }

    /// Scales the whole coefficient; 1/2 gives the Itô-correction propagator.
    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn v_squared(&self) -> &[f64] {
        &self.v_squared
    }

    pub fn is_zero(&self) -> bool {
        self.strength == 0.0 || self.v_squared.iter().all(|v| *v == 0.0)
    }

    /// `strength · ∫_{t0}^{t1} ⟨τ⟩^{−2γ} dτ`.
    pub fn integrated(&self, t0: f64, t1: f64) -> f64 {
        self.strength * envelope_integral(t0, t1, 2.0 * self.gamma)
    }

    /// Instantaneous `d/dt ‖u‖₂²` magnitude: `2 strength ⟨t⟩^{−2γ} ∫V²|u|²`.
    pub fn dissipation_rate(&self, u: &ComplexField, t: f64) -> f64 {
        let env = japanese_bracket(t).powf(-2.0 * self.gamma);
        let s: f64 = u
            .values()
            .iter()
            .zip(&self.v_squared)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum();
        2.0 * self.strength * env * s * u.grid().cell_volume()
    }

    /// Pointwise `e^{−∫a}` over `[t0, t1]`, or `None` when it is identically 1.
    pub(crate) fn factors(&self, t0: f64, t1: f64) -> Option<Vec<f64>> {
        let a = self.integrated(t0, t1);
        (a != 0.0).then(|| self.v_squared.iter().map(|w| if *w != 0.0 { (-a * w).exp() } else { 1.0 }).collect())
    }

    /// `u ← u · e^{−∫a}` over `[t0, t1]`.
    pub(crate) fn apply(&self, u: &mut ComplexField, t0: f64, t1: f64) {
        let a = self.integrated(t0, t1);
        if a == 0.0 {
            return;
        }
        for (v, w) in u.values_mut().iter_mut().zip(&self.v_squared) {
            if *w != 0.0 {
                *v *= (-a * w).exp();
            }
        }
    }
}

/// Substep building blocks shared by all splitting schemes.
#[derive(Debug, Clone)]
pub(crate) struct SplitKernel {
    pub(crate) ctx: SpectralContext,
    half: SpectralMultiplier,
    params: FlowParams,
    mask: Option<Vec<bool>>,
}

impl SplitKernel {
    pub(crate) fn new(params: FlowParams) -> Self {
        let grid = *params.grid();
        SplitKernel {
            ctx: SpectralContext::new(grid),
            half: SpectralMultiplier::free_schrodinger(grid, 0.5 * params.dt()),
            params,
            mask: params.dealias().then(|| grid.dealias_mask()),
        }
    }

    pub(crate) fn params(&self) -> &FlowParams {
        &self.params
    }

    pub(crate) fn half_kinetic(&self, u: &mut ComplexField) -> Result<()> {
        self.ctx.apply(u, &self.half)
    }

    /// `u ← u e^{−i|u|^σ τ}`; pointwise, so `|u|` is untouched.
    pub(crate) fn nonlinear(&self, u: &mut ComplexField, tau: f64, t: f64) -> Result<()> {
        let max = u.max_amplitude();
        if max > OVERFLOW_AMPLITUDE || !max.is_finite() {
            return Err(Error::Overflow {
                time: t,
                max_amplitude: max,
            });
        }
        let dim = self.params.grid().dim();
        for v in u.values_mut() {
            let r2 = v.norm_sqr();
            if r2 == 0.0 {
                continue;
            }
            let pow = match dim {
                1 => r2 * r2,
                2 => r2,
                _ => r2.powf(2.0 / 3.0),
            };
            let (s, c) = (-pow * tau).sin_cos();
            *v *= Complex64::new(c, s);
        }
        if let Some(mask) = &self.mask {
            let data = u.values_mut();
            self.ctx.forward(data);
            for (v, keep) in data.iter_mut().zip(mask) {
                if !keep {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            self.ctx.inverse(data);
        }
        Ok(())
    }
}

/// A one-step map `u(t_k) ↦ u(t_{k+1})` with `t_k = k·dt`.
pub trait Stepper {
    fn params(&self) -> &FlowParams;

    /// Metadata for records produced with this stepper.
    fn meta(&self) -> RunMeta;

    fn step(&mut self, u: &mut ComplexField, k: usize) -> Result<()>;

    /// `2∫a(t)V²|u|²` for damped flows.
    fn dissipation_rate(&self, _u: &ComplexField, _t: f64) -> Option<f64> {
        None
    }

    /// Propagator used to accumulate stochastic-convolution blocks.
    fn convolution_damping(&self) -> Option<&DampingSpec> {
        None
    }

    fn convolution_weight(&self) -> ConvolutionWeight {
        ConvolutionWeight::Potential
    }

    /// `(Itô increment, Milstein correction)` at step `k` from `u(t_k)`.
    fn convolution_sources(&self, _u: &ComplexField, _k: usize) -> Option<Result<(ComplexField, ComplexField)>> {
        None
    }

    /// `(RNG word position, B)` before increment `k`.
    fn rng_state(&self, _k: usize) -> Option<(u64, f64)> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct NlsStepper {
    kernel: SplitKernel,
}

impl NlsStepper {
    pub fn new(params: FlowParams) -> Self {
        NlsStepper {
            kernel: SplitKernel::new(params),
        }
    }
}

impl Stepper for NlsStepper {
    fn params(&self) -> &FlowParams {
        self.kernel.params()
    }

    fn meta(&self) -> RunMeta {
        base_meta(ModelKind::Nls, self.params(), 0.0, Potential::zero())
    }

    fn step(&mut self, u: &mut ComplexField, k: usize) -> Result<()> {
        let dt = self.params().dt();
        self.kernel.half_kinetic(u)?;
        self.kernel.nonlinear(u, dt, k as f64 * dt)?;
        self.kernel.half_kinetic(u)
    }
}

/// Linear damped flow `i∂ₜw + Δw = −i a(t,x) w`.
#[derive(Debug, Clone)]
pub struct DampedLinearStepper {
    kernel: SplitKernel,
    full: SpectralMultiplier,
    damping: DampingSpec,
}

impl DampedLinearStepper {
    pub fn new(params: FlowParams, damping: DampingSpec) -> Self {
        DampedLinearStepper {
            kernel: SplitKernel::new(params),
            full: SpectralMultiplier::free_schrodinger(*params.grid(), params.dt()),
            damping,
        }
    }

    pub fn damping(&self) -> &DampingSpec {
        &self.damping
    }

    /// One Strang step over `[t0, t1]`; the kinetic halves use the cached
    /// `dt/2` symbol, so `t1 − t0` must equal `dt`.
    fn full_step(&self, u: &mut ComplexField, t0: f64, t1: f64) -> Result<()> {
        self.kernel.half_kinetic(u)?;
        self.damping.apply(u, t0, t1);
        self.kernel.half_kinetic(u)
    }

    /// Applies `H(k1·dt, k0·dt)` in place: the same Strang steps as
    /// [`Stepper::step`], with adjacent kinetic halves fused.
    pub fn propagate_steps(&self, u: &mut ComplexField, k0: usize, k1: usize) -> Result<()> {
        if k1 <= k0 {
            return Ok(());
        }
        let dt = self.params().dt();
        self.kernel.half_kinetic(u)?;
        for k in k0..k1 {
            self.damping.apply(u, k as f64 * dt, (k + 1) as f64 * dt);
            if k + 1 < k1 {
                self.kernel.ctx.apply(u, &self.full)?;
            }
        }
        self.kernel.half_kinetic(u)
    }

    /// [`Self::propagate_steps`] applied to every field, sharing the damping
    /// factors of each step.
    pub fn propagate_steps_many(&self, fields: &mut [ComplexField], k0: usize, k1: usize) -> Result<()> {
        if k1 <= k0 {
            return Ok(());
        }
        let dt = self.params().dt();
        for u in fields.iter_mut() {
            self.kernel.half_kinetic(u)?;
        }
        for k in k0..k1 {
            let factors = self.damping.factors(k as f64 * dt, (k + 1) as f64 * dt);
            for u in fields.iter_mut() {
                if let Some(f) = &factors {
                    for (v, e) in u.values_mut().iter_mut().zip(f) {
                        *v *= e;
                    }
                }
                if k + 1 < k1 {
                    self.kernel.ctx.apply(u, &self.full)?;
                }
            }
        }
        for u in fields.iter_mut() {
            self.kernel.half_kinetic(u)?;
        }
        Ok(())
    }
}

impl Stepper for DampedLinearStepper {
    fn params(&self) -> &FlowParams {
        self.kernel.params()
    }

    fn meta(&self) -> RunMeta {
        base_meta(
            ModelKind::DampedLinear,
            self.params(),
            self.damping.gamma(),
            self.damping.potential(),
        )
    }

    fn step(&mut self, u: &mut ComplexField, k: usize) -> Result<()> {
        let dt = self.params().dt();
        self.full_step(u, k as f64 * dt, (k + 1) as f64 * dt)
    }

    fn dissipation_rate(&self, u: &ComplexField, t: f64) -> Option<f64> {
        Some(self.damping.dissipation_rate(u, t))
    }
}

/// Damped NLS `i∂ₜw + Δw = |w|^σ w − i a(t,x) w`.
#[derive(Debug, Clone)]
pub struct DampedNlsStepper {
    kernel: SplitKernel,
    damping: DampingSpec,
}

impl DampedNlsStepper {
    pub fn new(params: FlowParams, damping: DampingSpec) -> Self {
        DampedNlsStepper {
            kernel: SplitKernel::new(params),
            damping,
        }
    }
}

impl Stepper for DampedNlsStepper {
    fn params(&self) -> &FlowParams {
        self.kernel.params()
    }

    fn meta(&self) -> RunMeta {
        base_meta(
            ModelKind::DampedNls,
            self.params(),
            self.damping.gamma(),
            self.damping.potential(),
        )
    }

    fn step(&mut self, u: &mut ComplexField, k: usize) -> Result<()> {
        let dt = self.params().dt();
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let tm = 0.5 * (t0 + t1);
        self.kernel.half_kinetic(u)?;
        self.damping.apply(u, t0, tm);
        self.kernel.nonlinear(u, dt, t0)?;
        self.damping.apply(u, tm, t1);
        self.kernel.half_kinetic(u)
    }

    fn dissipation_rate(&self, u: &ComplexField, t: f64) -> Option<f64> {
        Some(self.damping.dissipation_rate(u, t))
    }
}

pub(crate) fn base_meta(model: ModelKind, params: &FlowParams, gamma: f64, potential: Potential) -> RunMeta {
    RunMeta {
        model,
        grid: *params.grid(),
        dt: params.dt(),
        dealias: params.dealias(),
        gamma,
        potential,
        stream: None,
        rng_cursor: None,
        brownian_value: None,
    }
}

/// One Strang NLS step from `t`.
pub fn nls_step(u: &ComplexField, params: &FlowParams, t: f64) -> Result<ComplexField> {
    check_params(u, params)?;
    let kernel = SplitKernel::new(*params);
    let mut out = u.clone();
    kernel.half_kinetic(&mut out)?;
    kernel.nonlinear(&mut out, params.dt(), t)?;
    kernel.half_kinetic(&mut out)?;
    Ok(out)
}

/// One Strang damped-NLS step over `[t, t+dt]`.
pub fn damped_nls_step(u: &ComplexField, params: &FlowParams, damping: &DampingSpec, t: f64) -> Result<ComplexField> {
    check_params(u, params)?;
    check_damping(u, damping)?;
    let kernel = SplitKernel::new(*params);
    let mut out = u.clone();
    let tm = t + 0.5 * params.dt();
    kernel.half_kinetic(&mut out)?;
    damping.apply(&mut out, t, tm);
    kernel.nonlinear(&mut out, params.dt(), t)?;
    damping.apply(&mut out, tm, t + params.dt());
    kernel.half_kinetic(&mut out)?;
    Ok(out)
}

/// `H(t,s)f` by Strang steps of `dt` from `s`, with a final partial step.
pub fn damped_linear_propagate(f: &ComplexField, s: f64, t: f64, damping: &DampingSpec, dt: f64) -> Result<ComplexField> {
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::param("t", "times must be finite"));
    }
    if t < s {
        return Err(Error::param("t", format!("propagation runs forward only (s = {s}, t = {t})")));
    }
    check_damping(f, damping)?;
    let params = FlowParams::new(*f.grid(), dt)?;
    let kernel = SplitKernel::new(params);
    let mut out = f.clone();
    let full = ((t - s) / dt).floor() as usize;
    for j in 0..full {
        let t0 = s + j as f64 * dt;
        kernel.half_kinetic(&mut out)?;
        damping.apply(&mut out, t0, t0 + dt);
        kernel.half_kinetic(&mut out)?;
    }
    let t0 = s + full as f64 * dt;
    let rest = t - t0;
    if rest > 1e-12 * dt {
        let half = SpectralMultiplier::free_schrodinger(*f.grid(), 0.5 * rest);
        kernel.ctx.apply(&mut out, &half)?;
        damping.apply(&mut out, t0, t);
        kernel.ctx.apply(&mut out, &half)?;
    }
    Ok(out)
}

fn check_params(u: &ComplexField, params: &FlowParams) -> Result<()> {
    if u.grid() != params.grid() {
        return Err(Error::GridMismatch);
    }
    if !u.is_finite() {
        return Err(Error::param("u", "field must be finite"));
    }
    Ok(())
}

fn check_damping(u: &ComplexField, damping: &DampingSpec) -> Result<()> {
    if damping.v_squared().len() != u.grid().len() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Converts checkpoint times into step indices, adding `0` and the horizon.
pub fn checkpoint_schedule(dt: f64, horizon: f64, checkpoints: &[f64]) -> Result<Vec<usize>> {
    let to_step = |t: f64, what: &'static str| -> Result<usize> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param(what, format!("time {t} must be finite and >= 0")));
        }
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::param(what, format!("time {t} is not a multiple of dt = {dt}")));
        }
        Ok(k as usize)
    };
    let last = to_step(horizon, "flow.horizon")?;
    let mut steps = Vec::with_capacity(checkpoints.len() + 2);
    steps.push(0);
    for (i, &t) in checkpoints.iter().enumerate() {
        if i > 0 && t <= checkpoints[i - 1] {
            return Err(Error::param("flow.checkpoints", "checkpoints must be increasing"));
        }
        let k = to_step(t, "flow.checkpoints")?;
        if k > last {
            return Err(Error::param("flow.checkpoints", format!("checkpoint {t} beyond horizon {horizon}")));
        }
        if k > *steps.last().unwrap() {
            steps.push(k);
        }
    }
    if last > *steps.last().unwrap() {
        steps.push(last);
    }
    Ok(steps)
}

/// Equally spaced checkpoints `every, 2·every, …` up to `horizon`.
pub fn uniform_checkpoints(every: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / every + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * every).collect()
}

/// Checkpoint-by-checkpoint driver; resumable from any recorded checkpoint.
pub struct Evolution<S: Stepper> {
    stepper: S,
    record: TrajectoryRecord,
    schedule: Vec<usize>,
    current: ComplexField,
    step: usize,
    dissipation: f64,
    conv: Option<ConvolutionState>,
}

struct ConvolutionState {
    propagator: DampedLinearStepper,
    ito: ComplexField,
    milstein: ComplexField,
}

impl<S: Stepper> Evolution<S> {
    pub fn new(u0: ComplexField, stepper: S, schedule: Vec<usize>) -> Result<Self> {
        if u0.grid() != stepper.params().grid() {
            return Err(Error::GridMismatch);
        }
        if !u0.is_finite() {
            return Err(Error::param("u0", "initial field must be finite"));
        }
        let mut meta = stepper.meta();
        if let Some((cursor, b)) = stepper.rng_state(0) {
            meta.rng_cursor = Some(cursor);
            meta.brownian_value = Some(b);
        }
        let dissipation = stepper.dissipation_rate(&u0, 0.0).map(|_| alloc::vec![0.0]);
        let convolution = stepper.convolution_damping().map(|d| ConvolutionLedger {
            damping_strength: d.strength(),
            weight: stepper.convolution_weight(),
            ito: Vec::new(),
            milstein: Vec::new(),
        });
        let record = TrajectoryRecord {
            meta,
            steps: alloc::vec![0],
            mass: alloc::vec![u0.mass()],
            fields: alloc::vec![u0.clone()],
            dissipation,
            convolution,
        };
        Self::from_record(record, stepper, schedule)
    }

    /// Continues a partial record produced by the same stepper configuration.
    pub fn resume(record: TrajectoryRecord, stepper: S, schedule: Vec<usize>) -> Result<Self> {
        record.validate()?;
        if record.meta.grid != *stepper.params().grid() || record.meta.dt != stepper.params().dt() {
            return Err(Error::param("resume", "record does not match the stepper configuration"));
        }
        if record.steps.len() > schedule.len() || record.steps[..] != schedule[..record.steps.len()] {
            return Err(Error::param("resume", "record checkpoints are not a prefix of the schedule"));
        }
        Self::from_record(record, stepper, schedule)
    }

    fn from_record(record: TrajectoryRecord, stepper: S, schedule: Vec<usize>) -> Result<Self> {
        if schedule.first() != Some(&0) || schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("flow.checkpoints", "schedule must start at 0 and increase"));
        }
        let current = record.fields.last().cloned().expect("validated record");
        let step = *record.steps.last().unwrap();
        let dissipation = record.dissipation.as_ref().map_or(0.0, |d| *d.last().unwrap());
        let conv = stepper.convolution_damping().map(|d| ConvolutionState {
            propagator: DampedLinearStepper::new(*stepper.params(), d.clone()),
            ito: ComplexField::zeros(*current.grid()),
            milstein: ComplexField::zeros(*current.grid()),
        });
        Ok(Evolution {
            stepper,
            record,
            schedule,
            current,
            step,
            dissipation,
            conv,
        })
    }

    pub fn record(&self) -> &TrajectoryRecord {
        &self.record
    }

    pub fn stepper(&self) -> &S {
        &self.stepper
    }

    pub fn is_finished(&self) -> bool {
        self.record.steps.len() == self.schedule.len()
    }

    /// Time of the last recorded checkpoint.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.stepper.params().dt()
    }

    /// Integrates to the next checkpoint and records it. Returns `false` once
    /// the schedule is exhausted.
    pub fn advance(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let target = self.schedule[self.record.steps.len()];
        let dt = self.stepper.params().dt();
        let mut rate = self.stepper.dissipation_rate(&self.current, self.step as f64 * dt);
        while self.step < target {
            let k = self.step;
            if let (Some(state), Some(sources)) = (
                self.conv.as_mut(),
                self.stepper.convolution_sources(&self.current, k),
            ) {
                let (ito, mil) = sources?;
                state.ito.axpy(Complex64::new(1.0, 0.0), &ito)?;
                state.milstein.axpy(Complex64::new(1.0, 0.0), &mil)?;
                state.propagator.step(&mut state.ito, k)?;
                state.propagator.step(&mut state.milstein, k)?;
            }
            self.stepper.step(&mut self.current, k)?;
            self.step += 1;
            if !self.current.is_finite() {
                let max = self
                    .current
                    .values()
                    .iter()
                    .map(|v| v.norm())
                    .filter(|v| v.is_finite())
                    .fold(0.0, f64::max);
                return Err(Error::NonFinite {
                    time: self.step as f64 * dt,
                    max_amplitude: max,
                });
            }
            if let Some(r0) = rate {
                let r1 = self
                    .stepper
                    .dissipation_rate(&self.current, self.step as f64 * dt)
                    .unwrap_or(0.0);
                self.dissipation += 0.5 * dt * (r0 + r1);
                rate = Some(r1);
            }
        }
        let rec = &mut self.record;
        rec.steps.push(self.step);
        rec.mass.push(self.current.mass());
        rec.fields.push(self.current.clone());
        if let Some(d) = rec.dissipation.as_mut() {
            d.push(self.dissipation);
        }
        if let (Some(ledger), Some(state)) = (rec.convolution.as_mut(), self.conv.as_mut()) {
            let zero = ComplexField::zeros(*self.current.grid());
            ledger.ito.push(core::mem::replace(&mut state.ito, zero.clone()));
            ledger.milstein.push(core::mem::replace(&mut state.milstein, zero));
        }
        if let Some((cursor, b)) = self.stepper.rng_state(self.step) {
            rec.meta.rng_cursor = Some(cursor);
            rec.meta.brownian_value = Some(b);
        }
        Ok(true)
    }

    pub fn run(mut self) -> Result<TrajectoryRecord> {
        while self.advance()? {}
        Ok(self.record)
    }

    pub fn into_record(self) -> TrajectoryRecord {
        self.record
    }
}

/// Integrates `u0` to `horizon`, recording `0`, each checkpoint and the horizon.
pub fn evolve<S: Stepper>(u0: &ComplexField, stepper: S, horizon: f64, checkpoints: &[f64]) -> Result<TrajectoryRecord> {
    let schedule = checkpoint_schedule(stepper.params().dt(), horizon, checkpoints)?;
    Evolution::new(u0.clone(), stepper, schedule)?.run()
}

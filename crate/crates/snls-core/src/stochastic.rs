//! Brownian driver and the stochastic NLS integrators.
//!
//! The Itô equation with its `−½⟨t⟩^{−2γ}V²u dt` correction is the
//! Stratonovich equation `du = … − i⟨t⟩^{−γ}V u ∘ dB`. Because `−iV` is purely
//! imaginary the noise acts as a phase, and [`SnlsStepper`] integrates it by
//! the exact exponential `exp(−iV⟨t_mid⟩^{−γ}ΔB_k)`. Every substep is unitary
//! or unit-modulus, so `‖u‖₂` is conserved on every path up to roundoff.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::field::ComplexField;
use crate::flows::{base_meta, japanese_bracket, DampingSpec, FlowParams, Potential, SplitKernel, Stepper};
use crate::record::{ConvolutionWeight, ModelKind, RunMeta};
use crate::{Error, Result};

/// Counter-based stream identity: `(master seed, path index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub path: u64,
}

impl StreamKey {
    pub fn new(seed: u64, path: u64) -> Self {
        StreamKey { seed, path }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}

/// Sequential source of `N(0, dt)` increments; its word position is the
/// resume cursor.
#[derive(Debug, Clone)]
pub struct BrownianStream {
    rng: ChaCha8Rng,
    sqrt_dt: f64,
}

impl BrownianStream {
    pub fn new(key: StreamKey, dt: f64) -> Self {
        Self::at(key, dt, 0)
    }

    pub fn at(key: StreamKey, dt: f64, cursor: u64) -> Self {
        let mut rng = key.rng();
        rng.set_word_pos(cursor as u128);
        BrownianStream {
            rng,
            sqrt_dt: dt.sqrt(),
        }
    }

    pub fn cursor(&self) -> u64 {
        self.rng.get_word_pos() as u64
    }

    pub fn next_increment(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sqrt_dt * z
    }
}

/// Precomputed increments `ΔB_k`, `k ∈ [first_step, first_step + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    key: StreamKey,
    dt: f64,
    first_step: usize,
    start_value: f64,
    increments: Vec<f64>,
    cursors: Vec<u64>,
    cumulative: Vec<f64>,
}

impl BrownianPath {
    /// `⌈horizon/dt⌉` increments of the stream `key`.
    pub fn sample(key: StreamKey, dt: f64, horizon: f64) -> Result<Self> {
        Self::sample_from(key, dt, horizon, 0, 0, 0.0)
    }

    /// Regenerates the tail of a path from a saved cursor: increments from
    /// `first_step` on, with `B(t_first) = start_value`.
    pub fn sample_from(key: StreamKey, dt: f64, horizon: f64, first_step: usize, cursor: u64, start_value: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("time step must be positive (got {dt})")));
        }
        if !(horizon.is_finite() && horizon >= dt) {
            return Err(Error::param("horizon", format!("horizon {horizon} shorter than dt {dt}")));
        }
        let total = (horizon / dt - 1e-9).ceil() as usize;
        let n = total.saturating_sub(first_step);
        let mut stream = BrownianStream::at(key, dt, cursor);
        let mut increments = Vec::with_capacity(n);
        let mut cursors = Vec::with_capacity(n + 1);
        for _ in 0..n {
            cursors.push(stream.cursor());
            increments.push(stream.next_increment());
        }
        cursors.push(stream.cursor());
        Ok(Self::assemble(key, dt, first_step, start_value, increments, cursors))
    }

    fn assemble(key: StreamKey, dt: f64, first_step: usize, start_value: f64, increments: Vec<f64>, cursors: Vec<u64>) -> Self {
        let mut cumulative = Vec::with_capacity(increments.len() + 1);
        let mut b = start_value;
        cumulative.push(b);
        for db in &increments {
            b += db;
            cumulative.push(b);
        }
        BrownianPath {
            key,
            dt,
            first_step,
            start_value,
            increments,
            cursors,
            cumulative,
        }
    }

    /// Same Brownian motion on a grid `factor` times coarser (sums of
    /// consecutive increments). Cursors are not meaningful afterwards.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.first_step % factor != 0 || self.increments.len() % factor != 0 {
            return Err(Error::param("factor", "path length must be divisible by the factor"));
        }
        let increments: Vec<f64> = self.increments.chunks(factor).map(|c| c.iter().sum()).collect();
        let cursors = self.cursors.iter().step_by(factor).copied().collect();
        Ok(Self::assemble(
            self.key,
            self.dt * factor as f64,
            self.first_step / factor,
            self.start_value,
            increments,
            cursors,
        ))
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn first_step(&self) -> usize {
        self.first_step
    }

    /// One past the last available step.
    pub fn end_step(&self) -> usize {
        self.first_step + self.increments.len()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, k: usize) -> Result<f64> {
        self.offset(k).map(|i| self.increments[i])
    }

    /// `B(t_k)`, defined for `k ∈ [first_step, end_step]`.
    pub fn value(&self, k: usize) -> Result<f64> {
        if k == self.end_step() {
            return Ok(*self.cumulative.last().unwrap());
        }
        self.offset(k).map(|i| self.cumulative[i])
    }

    /// RNG word position before increment `k`.
    pub fn cursor(&self, k: usize) -> Result<u64> {
        if k == self.end_step() {
            return Ok(*self.cursors.last().unwrap());
        }
        self.offset(k).map(|i| self.cursors[i])
    }

    fn offset(&self, k: usize) -> Result<usize> {
        if k < self.first_step || k >= self.end_step() {
            return Err(Error::StepOutOfRange {
                step: k,
                first: self.first_step,
                end: self.end_step(),
            });
        }
        Ok(k - self.first_step)
    }
}

/// `⌈horizon/dt⌉` increments from stream `(seed, 0)`.
pub fn sample_path(seed: u64, dt: f64, horizon: f64) -> Result<BrownianPath> {
    BrownianPath::sample(StreamKey::new(seed, 0), dt, horizon)
}

/// Single-mode noise `W = V(x) B_t` with envelope `⟨t⟩^{−γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    potential: Potential,
    v: Vec<f64>,
    gamma: f64,
}

impl NoiseSpec {
    pub fn new(grid: &crate::SpatialGrid, potential: Potential, gamma: f64) -> Result<Self> {
        potential.validate()?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::param("noise.gamma", format!("must be >= 0 (got {gamma})")));
        }
        Ok(NoiseSpec {
            potential,
            v: potential.sample(grid),
            gamma,
        })
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn envelope(&self, t: f64) -> f64 {
        japanese_bracket(t).powf(-self.gamma)
    }

    /// The linear propagator the Itô form splits off: coefficient
    /// `½⟨t⟩^{−2γ}V²`, which is exactly the Itô correction drift.
    pub fn ito_damping(&self, grid: &crate::SpatialGrid) -> Result<DampingSpec> {
        Ok(DampingSpec::new(grid, self.potential, self.gamma)?.with_strength(0.5))
    }

    fn phase(&self, u: &mut ComplexField, angle: f64) {
        if angle == 0.0 {
            return;
        }
        for (val, v) in u.values_mut().iter_mut().zip(&self.v) {
            let ph = v * angle;
            if ph != 0.0 {
                let (s, c) = (-ph).sin_cos();
                *val *= Complex64::new(c, s);
            }
        }
    }
}

/// `⟨t_k⟩^{−γ} V u ΔB_k`, the left-point Itô integrand increment.
pub fn stochastic_convolution_increment(u: &ComplexField, noise: &NoiseSpec, path: &BrownianPath, k: usize) -> Result<ComplexField> {
    let db = path.increment(k)?;
    let theta = noise.envelope(k as f64 * path.dt());
    let mut out = u.weighted(&noise.v);
    out.scale(Complex64::new(theta * db, 0.0));
    Ok(out)
}

/// `⟨t_k⟩^{−γ}|V|^{1/2} u ΔB_k`.
fn sqrt_weighted_increment(u: &ComplexField, noise: &NoiseSpec, path: &BrownianPath, k: usize) -> Result<ComplexField> {
    let db = path.increment(k)?;
    let theta = noise.envelope(k as f64 * path.dt());
    let w: Vec<f64> = noise.v.iter().map(|v| v.abs().sqrt()).collect();
    let mut out = u.weighted(&w);
    out.scale(Complex64::new(theta * db, 0.0));
    Ok(out)
}

/// `−(i/2)⟨t_k⟩^{−2γ} V² u (ΔB_k² − dt)`: the second-order term of the Itô
/// integral over one step.
fn milstein_correction(u: &ComplexField, noise: &NoiseSpec, path: &BrownianPath, k: usize) -> Result<ComplexField> {
    let db = path.increment(k)?;
    let theta = noise.envelope(k as f64 * path.dt());
    let v2: Vec<f64> = noise.v.iter().map(|v| v * v).collect();
    let mut out = u.weighted(&v2);
    out.scale(Complex64::new(0.0, -0.5 * theta * theta * (db * db - path.dt())));
    Ok(out)
}

fn check_path(params: &FlowParams, path: &BrownianPath) -> Result<()> {
    if (path.dt() - params.dt()).abs() > 1e-15 * params.dt() {
        return Err(Error::param("dt", "Brownian path and flow use different time steps"));
    }
    Ok(())
}

/// Exact-phase Strang splitting: half kinetic, nonlinear phase, noise phase
/// at the step midpoint, half kinetic.
#[derive(Debug, Clone)]
pub struct SnlsStepper {
    kernel: SplitKernel,
    noise: NoiseSpec,
    path: BrownianPath,
    convolution: Option<DampingSpec>,
    weight: ConvolutionWeight,
}

impl SnlsStepper {
    pub fn new(params: FlowParams, noise: NoiseSpec, path: BrownianPath) -> Result<Self> {
        check_path(&params, &path)?;
        Ok(SnlsStepper {
            kernel: SplitKernel::new(params),
            noise,
            path,
            convolution: None,
            weight: ConvolutionWeight::Potential,
        })
    }

    /// Also accumulate stochastic-convolution blocks into the record.
    pub fn tracking_convolution(self) -> Result<Self> {
        self.tracking_convolution_weighted(ConvolutionWeight::Potential)
    }

    /// Accumulates the convolution with `weight` in place of `V`.
    pub fn tracking_convolution_weighted(mut self, weight: ConvolutionWeight) -> Result<Self> {
        self.convolution = Some(self.noise.ito_damping(self.kernel.params().grid())?);
        self.weight = weight;
        Ok(self)
    }

    pub fn path(&self) -> &BrownianPath {
        &self.path
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }
}

impl Stepper for SnlsStepper {
    fn params(&self) -> &FlowParams {
        self.kernel.params()
    }

    fn meta(&self) -> RunMeta {
        let mut meta = base_meta(ModelKind::Snls, self.params(), self.noise.gamma, self.noise.potential);
        meta.stream = Some(self.path.key());
        meta
    }

    fn step(&mut self, u: &mut ComplexField, k: usize) -> Result<()> {
        let dt = self.params().dt();
        let db = self.path.increment(k)?;
        let t0 = k as f64 * dt;
        self.kernel.half_kinetic(u)?;
        self.kernel.nonlinear(u, dt, t0)?;
        self.noise.phase(u, self.noise.envelope(t0 + 0.5 * dt) * db);
        self.kernel.half_kinetic(u)
    }

    fn convolution_damping(&self) -> Option<&DampingSpec> {
        self.convolution.as_ref()
    }

    fn convolution_weight(&self) -> ConvolutionWeight {
        self.weight
    }

    fn convolution_sources(&self, u: &ComplexField, k: usize) -> Option<Result<(ComplexField, ComplexField)>> {
        self.convolution.as_ref()?;
        Some(match self.weight {
            ConvolutionWeight::Potential => stochastic_convolution_increment(u, &self.noise, &self.path, k)
                .and_then(|ito| Ok((ito, milstein_correction(u, &self.noise, &self.path, k)?))),
            ConvolutionWeight::SqrtPotential => sqrt_weighted_increment(u, &self.noise, &self.path, k)
                .map(|ito| (ito, ComplexField::zeros(*u.grid()))),
        })
    }

    fn rng_state(&self, k: usize) -> Option<(u64, f64)> {
        Some((self.path.cursor(k).ok()?, self.path.value(k).ok()?))
    }
}

/// One exact-phase SNLS step over `[t_k, t_{k+1}]`.
pub fn snls_step(u: &ComplexField, params: &FlowParams, noise: &NoiseSpec, path: &BrownianPath, k: usize) -> Result<ComplexField> {
    let mut stepper = SnlsStepper::new(*params, noise.clone(), path.clone())?;
    let mut out = u.clone();
    stepper.step(&mut out, k)?;
    Ok(out)
}

/// Noise update used by [`ItoStepper`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItoScheme {
    /// `u ← u − iθVuΔB − ½θ²V²u dt`
    EulerMaruyama,
    /// Euler–Maruyama plus `−½θ²V²u(ΔB² − dt)`.
    Milstein,
}

/// The literal Itô form: noise term and explicit correction drift, evaluated
/// at the left endpoint. Not mass conservative; used as a consistency check
/// for [`SnlsStepper`].
#[derive(Debug, Clone)]
pub struct ItoStepper {
    kernel: SplitKernel,
    noise: NoiseSpec,
    path: BrownianPath,
    scheme: ItoScheme,
}

impl ItoStepper {
    pub fn new(params: FlowParams, noise: NoiseSpec, path: BrownianPath, scheme: ItoScheme) -> Result<Self> {
        check_path(&params, &path)?;
        Ok(ItoStepper {
            kernel: SplitKernel::new(params),
            noise,
            path,
            scheme,
        })
    }
}

impl Stepper for ItoStepper {
    fn params(&self) -> &FlowParams {
        self.kernel.params()
    }

    fn meta(&self) -> RunMeta {
        let mut meta = base_meta(ModelKind::SnlsIto, self.params(), self.noise.gamma, self.noise.potential);
        meta.stream = Some(self.path.key());
        meta
    }

    fn step(&mut self, u: &mut ComplexField, k: usize) -> Result<()> {
        let dt = self.params().dt();
        let db = self.path.increment(k)?;
        let t0 = k as f64 * dt;
        let theta = self.noise.envelope(t0);
        let quad = match self.scheme {
            ItoScheme::EulerMaruyama => dt,
            ItoScheme::Milstein => db * db,
        };
        self.kernel.half_kinetic(u)?;
        self.kernel.nonlinear(u, dt, t0)?;
        for (val, v) in u.values_mut().iter_mut().zip(&self.noise.v) {
            let a = theta * v;
            *val *= Complex64::new(1.0 - 0.5 * a * a * quad, -a * db);
        }
        self.kernel.half_kinetic(u)
    }

    fn rng_state(&self, k: usize) -> Option<(u64, f64)> {
        Some((self.path.cursor(k).ok()?, self.path.value(k).ok()?))
    }
}

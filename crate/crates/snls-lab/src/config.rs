//! Flat `key=value` experiment configuration.
//!
//! One entry per line, `#` starts a comment, unknown or repeated keys are
//! errors. Every key has a default that depends on the experiment kind (and,
//! for grid-sized quantities, on `grid.d`), so an empty file is a valid
//! `mass-check`. `Display` prints every key, and parsing that output gives
//! back the same config.

use std::collections::BTreeMap;
use std::fmt;

use snls_core::diagnostics::{Exponent, StrichartzPair};
use snls_core::ensemble::{EnsembleSpec, InitialData};
use snls_core::flows::{checkpoint_schedule, uniform_checkpoints, FlowParams, Potential};
use snls_core::SpatialGrid;

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    MassCheck,
    DissipationCheck,
    DispersiveCheck,
    DuhamelCheck,
    GammaSweep,
    ScatteringStudy,
    BurkholderCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::MassCheck,
        ExperimentKind::DissipationCheck,
        ExperimentKind::DispersiveCheck,
        ExperimentKind::DuhamelCheck,
        ExperimentKind::GammaSweep,
        ExperimentKind::ScatteringStudy,
        ExperimentKind::BurkholderCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MassCheck => "mass-check",
            ExperimentKind::DissipationCheck => "dissipation-check",
            ExperimentKind::DispersiveCheck => "dispersive-check",
            ExperimentKind::DuhamelCheck => "duhamel-check",
            ExperimentKind::GammaSweep => "gamma-sweep",
            ExperimentKind::ScatteringStudy => "scattering-study",
            ExperimentKind::BurkholderCheck => "burkholder-check",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether the preset evolves an ensemble of resumable SNLS paths.
    pub fn is_ensemble(self) -> bool {
        matches!(
            self,
            ExperimentKind::MassCheck | ExperimentKind::GammaSweep | ExperimentKind::ScatteringStudy
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
    pub dt: f64,
    pub horizon: f64,
    pub checkpoint_every: f64,
    pub dealias: bool,
    pub v0: f64,
    pub gamma: f64,
    pub v_width: f64,
    pub init_amplitude: f64,
    pub init_width: f64,
    /// Target `‖u₀‖₂`; overrides the amplitude.
    pub init_mass: Option<f64>,
    pub init_random_phase: bool,
    pub paths: usize,
    pub seed: u64,
    pub rhos: Vec<f64>,
    /// 0 defers to `--workers`, then `SNLS_LAB_WORKERS`, then the core count.
    pub workers: usize,
    pub pair: StrichartzPair,
    pub maximal: bool,
    pub probes: Vec<f64>,
    pub sweep_gammas: Vec<f64>,
    pub sweep_horizons: Vec<f64>,
    pub dispersive_times: Vec<f64>,
    pub burkholder_repeats: usize,
    /// Empty defers to `--out`, then `snls-lab-out/<experiment>`.
    pub output_dir: String,
}

/// Every key, in print order.
pub const KEYS: [&str; 29] = [
    "experiment",
    "grid.d",
    "grid.L",
    "grid.N",
    "flow.dt",
    "flow.horizon",
    "flow.checkpoint_every",
    "flow.dealias",
    "noise.v0",
    "noise.gamma",
    "noise.width",
    "init.amplitude",
    "init.width",
    "init.mass",
    "init.random_phase",
    "ensemble.paths",
    "ensemble.seed",
    "ensemble.rho",
    "ensemble.workers",
    "strichartz.q",
    "strichartz.p",
    "diagnostics.maximal",
    "diagnostics.probes",
    "sweep.gammas",
    "sweep.horizons",
    "dispersive.times",
    "burkholder.repeats",
    "output.dir",
    "flow.model",
];

fn steps(from: f64, to: f64, by: f64) -> String {
    let n = ((to - from) / by).round() as usize;
    (0..=n)
        .map(|i| format!("{}", from + i as f64 * by))
        .collect::<Vec<_>>()
        .join(",")
}

/// Textual default of `key` for an experiment kind and dimension.
fn default_value(kind: ExperimentKind, dim: usize, key: &str) -> String {
    use ExperimentKind::*;
    let s = |v: &str| v.to_string();
    match key {
        "experiment" => s(kind.name()),
        "grid.d" => s("1"),
        "grid.L" => match (kind, dim) {
            (DispersiveCheck, 1) => s("256"),
            (DispersiveCheck, 2) => s("64"),
            (DispersiveCheck, _) => s("48"),
            (GammaSweep, 1) => s("512"),
            (ScatteringStudy, 1) => s("2048"),
            (_, 1) => s("64"),
            (_, 2) => s("32"),
            _ => s("16"),
        },
        "grid.N" => match (kind, dim) {
            (DispersiveCheck, 1) => s("1024"),
            (DispersiveCheck, 2) => s("256"),
            (GammaSweep, 1) => s("2048"),
            (ScatteringStudy, 1) => s("4096"),
            (_, 1) => s("256"),
            (_, 2) => s("64"),
            _ => s("64"),
        },
        "flow.dt" => match kind {
            GammaSweep | ScatteringStudy | DispersiveCheck => s("0.01"),
            _ => s("0.001"),
        },
        "flow.horizon" => match kind {
            MassCheck => s("10"),
            DissipationCheck => s("5"),
            DispersiveCheck => s(if dim == 3 { "4" } else { "20" }),
            DuhamelCheck => s("2"),
            GammaSweep => s("20"),
            ScatteringStudy => s("80"),
            BurkholderCheck => s("1"),
        },
        "flow.checkpoint_every" => match kind {
            MassCheck => s("0.5"),
            DissipationCheck | GammaSweep => s("0.25"),
            DispersiveCheck => s(if dim == 3 { "0.25" } else { "1" }),
            DuhamelCheck => s("0.001"),
            ScatteringStudy => s("1"),
            BurkholderCheck => s("0.001"),
        },
        "flow.dealias" | "init.random_phase" => s("false"),
        "flow.model" => s(match kind {
            DissipationCheck => "damped-nls",
            DispersiveCheck => "free",
            _ => "snls",
        }),
        "noise.v0" | "noise.width" | "init.amplitude" | "init.width" => s("1"),
        "noise.gamma" => s(match kind {
            DuhamelCheck => "0.5",
            ScatteringStudy => "0.3",
            _ => "0.1",
        }),
        "init.mass" => s(if kind == ScatteringStudy { "0.5" } else { "none" }),
        "ensemble.paths" => s(match kind {
            MassCheck => "8",
            GammaSweep => "32",
            ScatteringStudy => "16",
            BurkholderCheck => "4096",
            _ => "1",
        }),
        "ensemble.seed" => s("42"),
        "ensemble.rho" => s(match kind {
            BurkholderCheck => "2,4",
            ScatteringStudy => "1.5,2",
            _ => "1.5,2,inf",
        }),
        "ensemble.workers" => s("0"),
        "strichartz.q" => StrichartzPair::default_for(dim).time.to_string(),
        "strichartz.p" => StrichartzPair::default_for(dim).space.to_string(),
        "diagnostics.maximal" => s(if kind == MassCheck { "true" } else { "false" }),
        "diagnostics.probes" => s(if kind == ScatteringStudy { "5,40" } else { "" }),
        "sweep.gammas" => s("2,0.5,0.1,0"),
        "sweep.horizons" => s("5,10,20"),
        "dispersive.times" => {
            if dim == 3 {
                steps(1.0, 4.0, 0.25)
            } else {
                steps(1.0, 20.0, 1.0)
            }
        }
        "burkholder.repeats" => s("3"),
        "output.dir" => s(""),
        _ => unreachable!("no default for {key}"),
    }
}

fn parse_f64(key: &str, v: &str) -> LabResult<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| LabError::config(key, format!("expected a number, got `{v}`")))?;
    if x.is_nan() {
        return Err(LabError::config(key, "NaN is not allowed"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> LabResult<usize> {
    v.trim()
        .parse()
        .map_err(|_| LabError::config(key, format!("expected a non-negative integer, got `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> LabResult<bool> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(LabError::config(key, format!("expected true or false, got `{other}`"))),
    }
}

fn parse_list(key: &str, v: &str) -> LabResult<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_f64(key, x)).collect()
}

fn parse_exponent(key: &str, v: &str) -> LabResult<Exponent> {
    v.parse()
        .map_err(|_| LabError::config(key, format!("expected an exponent like 14/3, 2.8 or inf, got `{v}`")))
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::parse("").expect("defaults are valid")
    }
}

impl ExperimentConfig {
    /// Defaults of `kind`.
    pub fn preset(kind: ExperimentKind) -> Self {
        ExperimentConfig::parse(&format!("experiment={kind}")).expect("preset defaults are valid")
    }

    pub fn parse(text: &str) -> LabResult<Self> {
        let mut given: BTreeMap<&str, &str> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::config(line, format!("line {} is not key=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS
                .iter()
                .find(|known| **known == k)
                .ok_or_else(|| LabError::config(k, "unknown key"))?;
            if given.insert(key, v).is_some() {
                return Err(LabError::config(k, "given more than once"));
            }
        }
        let kind = match given.get("experiment") {
            Some(v) => ExperimentKind::from_name(v).ok_or_else(|| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                LabError::config("experiment", format!("`{v}` is not one of {}", names.join(", ")))
            })?,
            None => ExperimentKind::MassCheck,
        };
        let dim = match given.get("grid.d") {
            Some(v) => parse_usize("grid.d", v)?,
            None => 1,
        };
        if !(1..=3).contains(&dim) {
            return Err(LabError::config("grid.d", "dimension must be 1, 2 or 3"));
        }
        let owned: BTreeMap<&str, String> = KEYS
            .iter()
            .map(|k| (*k, given.get(k).map_or_else(|| default_value(kind, dim, k), |v| v.to_string())))
            .collect();
        let get = |k: &str| owned[k].as_str();
        if get("flow.model") != default_value(kind, dim, "flow.model") {
            return Err(LabError::config(
                "flow.model",
                format!("`{}` preset runs `{}`", kind, default_value(kind, dim, "flow.model")),
            ));
        }
        let init_mass = match get("init.mass") {
            "none" => None,
            v => Some(parse_f64("init.mass", v)?),
        };
        let seed = get("ensemble.seed")
            .parse()
            .map_err(|_| LabError::config("ensemble.seed", "expected an unsigned 64-bit integer"))?;
        let cfg = ExperimentConfig {
            experiment: kind,
            dim,
            extent: parse_f64("grid.L", get("grid.L"))?,
            points: parse_usize("grid.N", get("grid.N"))?,
            dt: parse_f64("flow.dt", get("flow.dt"))?,
            horizon: parse_f64("flow.horizon", get("flow.horizon"))?,
            checkpoint_every: parse_f64("flow.checkpoint_every", get("flow.checkpoint_every"))?,
            dealias: parse_bool("flow.dealias", get("flow.dealias"))?,
            v0: parse_f64("noise.v0", get("noise.v0"))?,
            gamma: parse_f64("noise.gamma", get("noise.gamma"))?,
            v_width: parse_f64("noise.width", get("noise.width"))?,
            init_amplitude: parse_f64("init.amplitude", get("init.amplitude"))?,
            init_width: parse_f64("init.width", get("init.width"))?,
            init_mass,
            init_random_phase: parse_bool("init.random_phase", get("init.random_phase"))?,
            paths: parse_usize("ensemble.paths", get("ensemble.paths"))?,
            seed,
            rhos: parse_list("ensemble.rho", get("ensemble.rho"))?,
            workers: parse_usize("ensemble.workers", get("ensemble.workers"))?,
            pair: StrichartzPair::new(
                parse_exponent("strichartz.q", get("strichartz.q"))?,
                parse_exponent("strichartz.p", get("strichartz.p"))?,
            ),
            maximal: parse_bool("diagnostics.maximal", get("diagnostics.maximal"))?,
            probes: parse_list("diagnostics.probes", get("diagnostics.probes"))?,
            sweep_gammas: parse_list("sweep.gammas", get("sweep.gammas"))?,
            sweep_horizons: parse_list("sweep.horizons", get("sweep.horizons"))?,
            dispersive_times: parse_list("dispersive.times", get("dispersive.times"))?,
            burkholder_repeats: parse_usize("burkholder.repeats", get("burkholder.repeats"))?,
            output_dir: get("output.dir").to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every constraint a preset relies on, naming the offending key.
    pub fn validate(&self) -> LabResult<()> {
        let err = |k: &str, r: String| LabError::config(k, r);
        if !self.points.is_power_of_two() || self.points < 16 {
            return Err(err("grid.N", format!("must be a power of two >= 16 (got {})", self.points)));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(err("grid.L", format!("must be positive (got {})", self.extent)));
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(err("flow.dt", format!("must lie in (0, 0.1] (got {})", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(err("flow.horizon", "must be finite and at least one time step".into()));
        }
        if !(self.checkpoint_every > 0.0) {
            return Err(err("flow.checkpoint_every", "must be positive".into()));
        }
        if !matches!(self.experiment, ExperimentKind::DispersiveCheck | ExperimentKind::BurkholderCheck) {
            checkpoint_schedule(self.dt, self.horizon, &self.checkpoints())
                .map_err(|e| err("flow.checkpoint_every", e.to_string()))?;
        }
        if !self.v0.is_finite() {
            return Err(err("noise.v0", "must be finite".into()));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(err("noise.gamma", format!("gamma must be >= 0 (got {})", self.gamma)));
        }
        if !(self.v_width.is_finite() && self.v_width > 0.0) {
            return Err(err("noise.width", "must be positive".into()));
        }
        if !self.init_amplitude.is_finite() {
            return Err(err("init.amplitude", "must be finite".into()));
        }
        if !(self.init_width.is_finite() && self.init_width > 0.0) {
            return Err(err("init.width", "must be positive".into()));
        }
        if let Some(m) = self.init_mass {
            if !(m.is_finite() && m >= 0.0) {
                return Err(err("init.mass", "must be `none` or a non-negative number".into()));
            }
        }
        if self.paths == 0 {
            return Err(err("ensemble.paths", "at least one path is required".into()));
        }
        if self.rhos.is_empty() {
            return Err(err("ensemble.rho", "at least one moment exponent is required".into()));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r >= 1.0)) {
            return Err(err("ensemble.rho", format!("moment exponents must be >= 1 (got {r})")));
        }
        if self.experiment == ExperimentKind::BurkholderCheck {
            if let Some(r) = self.rhos.iter().find(|r| !(**r >= 2.0 && r.is_finite())) {
                return Err(err("ensemble.rho", format!("Burkholder moments must lie in [2, inf) (got {r})")));
            }
            if self.burkholder_repeats == 0 {
                return Err(err("burkholder.repeats", "at least one master seed is required".into()));
            }
        }
        if !self.pair.is_admissible(self.dim) {
            return Err(err(
                "strichartz.q",
                format!(
                    "({}, {}) is not an admissible pair in d = {}: need 2/q + d/p = d/2 with q, p >= 2",
                    self.pair.time, self.pair.space, self.dim
                ),
            ));
        }
        for &t in &self.probes {
            if !self.is_checkpoint(t) {
                return Err(err("diagnostics.probes", format!("{t} is not a checkpoint time in [0, horizon]")));
            }
        }
        if self.experiment == ExperimentKind::GammaSweep {
            if self.sweep_gammas.is_empty() {
                return Err(err("sweep.gammas", "at least one gamma is required".into()));
            }
            if let Some(g) = self.sweep_gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                return Err(err("sweep.gammas", format!("gamma must be >= 0 (got {g})")));
            }
            if self.sweep_horizons.is_empty() {
                return Err(err("sweep.horizons", "at least one horizon is required".into()));
            }
            for &t in &self.sweep_horizons {
                if !(t > 0.0) || !self.is_checkpoint(t) || !self.is_checkpoint(0.5 * t) {
                    return Err(err(
                        "sweep.horizons",
                        format!("{t} and {} must be positive checkpoint times within flow.horizon", 0.5 * t),
                    ));
                }
            }
        }
        if self.experiment == ExperimentKind::DispersiveCheck {
            let t = &self.dispersive_times;
            if t.is_empty() || t[0] <= 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(err("dispersive.times", "times must be positive and strictly increasing".into()));
            }
            let n = (self.points as f64).powi(self.dim as i32);
            if n > (1u64 << 26) as f64 {
                return Err(err("grid.N", format!("N^d = {n} points is beyond the supported size")));
            }
        }
        if self.experiment == ExperimentKind::ScatteringStudy && self.probes.len() < 2 {
            return Err(err("diagnostics.probes", "needs an early and a late time, e.g. 5,40".into()));
        }
        Ok(())
    }

    fn is_checkpoint(&self, t: f64) -> bool {
        if !(0.0..=self.horizon * (1.0 + 1e-12)).contains(&t) {
            return false;
        }
        let k = t / self.checkpoint_every;
        (t - self.horizon).abs() < 1e-9 * self.horizon.max(1.0) || (k - k.round()).abs() < 1e-9 * k.max(1.0)
    }

    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid::new(self.dim, self.extent, self.points).expect("validated grid")
    }

    pub fn potential(&self) -> Potential {
        Potential {
            amplitude: self.v0,
            width: self.v_width,
        }
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams::new(self.grid(), self.dt)
            .expect("validated dt")
            .with_dealiasing(self.dealias)
    }

    pub fn checkpoints(&self) -> Vec<f64> {
        uniform_checkpoints(self.checkpoint_every, self.horizon)
    }

    pub fn initial(&self) -> InitialData {
        InitialData {
            amplitude: self.init_amplitude,
            width: self.init_width,
            l2_norm: self.init_mass,
            random_phase: self.init_random_phase,
        }
    }

    /// Ensemble description for the given `γ`.
    pub fn ensemble(&self, gamma: f64) -> EnsembleSpec {
        EnsembleSpec {
            paths: self.paths,
            master_seed: self.seed,
            rhos: self.rhos.clone(),
            grid: self.grid(),
            dt: self.dt,
            horizon: self.horizon,
            checkpoints: self.checkpoints(),
            potential: self.potential(),
            gamma,
            initial: self.initial(),
            pair: self.pair,
            maximal: self.maximal,
            probe_times: self.probes.clone(),
            dealias: self.dealias,
            workers: self.workers,
        }
    }

    fn value(&self, key: &str) -> String {
        let b = |x: bool| x.to_string();
        match key {
            "experiment" => self.experiment.name().into(),
            "grid.d" => self.dim.to_string(),
            "grid.L" => self.extent.to_string(),
            "grid.N" => self.points.to_string(),
            "flow.dt" => self.dt.to_string(),
            "flow.horizon" => self.horizon.to_string(),
            "flow.checkpoint_every" => self.checkpoint_every.to_string(),
            "flow.dealias" => b(self.dealias),
            "flow.model" => default_value(self.experiment, self.dim, "flow.model"),
            "noise.v0" => self.v0.to_string(),
            "noise.gamma" => self.gamma.to_string(),
            "noise.width" => self.v_width.to_string(),
            "init.amplitude" => self.init_amplitude.to_string(),
            "init.width" => self.init_width.to_string(),
            "init.mass" => self.init_mass.map_or("none".into(), |m| m.to_string()),
            "init.random_phase" => b(self.init_random_phase),
            "ensemble.paths" => self.paths.to_string(),
            "ensemble.seed" => self.seed.to_string(),
            "ensemble.rho" => list(&self.rhos),
            "ensemble.workers" => self.workers.to_string(),
            "strichartz.q" => self.pair.time.to_string(),
            "strichartz.p" => self.pair.space.to_string(),
            "diagnostics.maximal" => b(self.maximal),
            "diagnostics.probes" => list(&self.probes),
            "sweep.gammas" => list(&self.sweep_gammas),
            "sweep.horizons" => list(&self.sweep_horizons),
            "dispersive.times" => list(&self.dispersive_times),
            "burkholder.repeats" => self.burkholder_repeats.to_string(),
            "output.dir" => self.output_dir.clone(),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in KEYS {
            writeln!(f, "{key}={}", self.value(key))?;
        }
        Ok(())
    }
}

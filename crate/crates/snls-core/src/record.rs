//! Checkpointed path history.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::field::ComplexField;
use crate::flows::{DampingSpec, Potential};
use crate::grid::SpatialGrid;
use crate::stochastic::StreamKey;
use crate::{Error, Result};

/// Which equation produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `i∂ₜu + Δu = |u|^σ u`
    Nls,
    /// Linear damped flow defining `H(t,s)`.
    DampedLinear,
    /// Damped NLS.
    DampedNls,
    /// Stochastic NLS, exact-phase splitting.
    Snls,
    /// Stochastic NLS, literal Itô stepping.
    SnlsIto,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nls => "nls",
            ModelKind::DampedLinear => "damped-linear",
            ModelKind::DampedNls => "damped-nls",
            ModelKind::Snls => "snls",
            ModelKind::SnlsIto => "snls-ito",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "nls" => ModelKind::Nls,
            "damped-linear" => ModelKind::DampedLinear,
            "damped-nls" => ModelKind::DampedNls,
            "snls" => ModelKind::Snls,
            "snls-ito" => ModelKind::SnlsIto,
            _ => return None,
        })
    }

    pub fn is_nonlinear(self) -> bool {
        !matches!(self, ModelKind::DampedLinear)
    }
}

/// Parameters needed to re-derive every diagnostic from a record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub model: ModelKind,
    pub grid: SpatialGrid,
    pub dt: f64,
    pub dealias: bool,
    /// `γ` (equivalently `ε₀`).
    pub gamma: f64,
    pub potential: Potential,
    /// Brownian stream of stochastic runs.
    pub stream: Option<StreamKey>,
    /// RNG word position at the last recorded checkpoint.
    pub rng_cursor: Option<u64>,
    /// `B` at the last recorded checkpoint.
    pub brownian_value: Option<f64>,
}

/// Spatial weight multiplying `u` inside the stochastic convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionWeight {
    /// `V`, the integrand of the equation itself.
    #[default]
    Potential,
    /// `|V|^{1/2}`, for the `‖V^{1/2}u‖`-type maximal functions.
    SqrtPotential,
}

impl ConvolutionWeight {
    pub fn name(self) -> &'static str {
        match self {
            ConvolutionWeight::Potential => "v",
            ConvolutionWeight::SqrtPotential => "sqrt-v",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "v" => Some(ConvolutionWeight::Potential),
            "sqrt-v" => Some(ConvolutionWeight::SqrtPotential),
            _ => None,
        }
    }
}

/// Stochastic-convolution blocks. Block `j` holds
/// `Σ_{c_j ≤ t_k < c_{j+1}} H(c_{j+1}, t_k) incr_k`, where `incr_k` is the
/// left-point Itô increment `⟨t_k⟩^{−γ} W u(t_k) ΔB_k` with `W` the ledger
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionLedger {
    /// Coefficient of `⟨t⟩^{−2γ}V²` in the propagator `H` used for the blocks.
    pub damping_strength: f64,
    pub weight: ConvolutionWeight,
    pub ito: Vec<ComplexField>,
    /// Same accumulation for the second-order (Milstein) correction
    /// `−(i/2)⟨t_k⟩^{−2γ} V² u(t_k) (ΔB_k² − dt)`; zero for the `|V|^{1/2}`
    /// weight.
    pub milstein: Vec<ComplexField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub meta: RunMeta,
    /// Checkpoint step indices, strictly increasing, first is 0.
    pub steps: Vec<usize>,
    pub fields: Vec<ComplexField>,
    /// `‖u(t_k)‖₂²`
    pub mass: Vec<f64>,
    /// `∫₀^{t_k} 2a(τ)∫V²|u|² dx dτ` for damped flows.
    pub dissipation: Option<Vec<f64>>,
    pub convolution: Option<ConvolutionLedger>,
}

impl TrajectoryRecord {
    pub fn time(&self, k: usize) -> f64 {
        self.steps[k] as f64 * self.meta.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.steps.len()).map(|k| self.time(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.meta.grid
    }

    /// Checkpoint index whose time equals `t` (to step resolution).
    pub fn checkpoint_at(&self, t: f64) -> Option<usize> {
        let step = (t / self.meta.dt).round();
        if (step * self.meta.dt - t).abs() > 1e-9 * t.abs().max(1.0) || step < 0.0 {
            return None;
        }
        self.steps.binary_search(&(step as usize)).ok()
    }

    /// Propagator `H` matching the convolution blocks.
    pub fn convolution_damping(&self) -> Result<DampingSpec> {
        let ledger = self
            .convolution
            .as_ref()
            .ok_or(Error::MissingLedger("stochastic-convolution increments"))?;
        DampingSpec::new(&self.meta.grid, self.meta.potential, self.meta.gamma)
            .map(|d| d.with_strength(ledger.damping_strength))
    }

    /// Structural checks: column lengths and ordering.
    pub fn validate(&self) -> Result<()> {
        let n = self.steps.len();
        if n == 0 || self.steps[0] != 0 {
            return Err(Error::param("steps", "record must start at step 0"));
        }
        if self.steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("steps", "checkpoints must be strictly increasing"));
        }
        if self.fields.len() != n || self.mass.len() != n {
            return Err(Error::param("fields", "ledger columns differ in length"));
        }
        if self.fields.iter().any(|f| *f.grid() != self.meta.grid) {
            return Err(Error::GridMismatch);
        }
        if let Some(d) = &self.dissipation {
            if d.len() != n {
                return Err(Error::param("dissipation", "ledger length mismatch"));
            }
        }
        if let Some(c) = &self.convolution {
            if c.ito.len() + 1 != n || c.milstein.len() + 1 != n {
                return Err(Error::param("convolution", "block count must be checkpoints - 1"));
            }
        }
        Ok(())
    }
}

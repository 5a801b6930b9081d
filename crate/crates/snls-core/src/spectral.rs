//! Fourier multipliers and the free Schrödinger propagator `e^{itΔ}`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::fft::FftNd;
use crate::field::ComplexField;
use crate::grid::SpatialGrid;
use crate::{Error, Result};

/// Per-frequency symbol, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMultiplier {
    grid: SpatialGrid,
    symbol: Vec<Complex64>,
}

impl SpectralMultiplier {
    /// Symbol of `e^{itΔ}`, i.e. `e^{−it|ξ|²}`.
    pub fn free_schrodinger(grid: SpatialGrid, t: f64) -> Self {
        let symbol = grid
            .wavenumber_squared()
            .into_iter()
            .map(|k2| {
                let (s, c) = (-t * k2).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        SpectralMultiplier { grid, symbol }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    /// Zeroes the modes outside the 2/3-rule band.
    pub fn with_dealiasing(mut self) -> Self {
        for (s, keep) in self.symbol.iter_mut().zip(self.grid.dealias_mask()) {
            if !keep {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        self
    }
}

/// FFT plan plus the spectral data of one grid. Holds its own scratch-free
/// plan, so one context per worker is enough.
#[derive(Debug, Clone)]
pub struct SpectralContext {
    grid: SpatialGrid,
    fft: FftNd,
}

impl SpectralContext {
    pub fn new(grid: SpatialGrid) -> Self {
        SpectralContext {
            grid,
            fft: FftNd::new(grid.points(), grid.dim()),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.fft.forward(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.fft.inverse(data);
    }

    /// `u ← F⁻¹(m · F u)` in place.
    pub fn apply(&self, u: &mut ComplexField, m: &SpectralMultiplier) -> Result<()> {
        if u.grid() != m.grid() || *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let data = u.values_mut();
        self.fft.forward(data);
        for (v, s) in data.iter_mut().zip(m.symbol()) {
            *v *= s;
        }
        self.fft.inverse(data);
        Ok(())
    }

    pub fn free_propagate(&self, u: &ComplexField, t: f64) -> Result<ComplexField> {
        if !t.is_finite() {
            return Err(Error::param("t", "propagation time must be finite"));
        }
        let mut out = u.clone();
        if t == 0.0 {
            return Ok(out);
        }
        self.apply(&mut out, &SpectralMultiplier::free_schrodinger(self.grid, t))?;
        Ok(out)
    }
}

/// `e^{itΔ}u`. `t = 0` returns `u` unchanged.
pub fn free_propagate(u: &ComplexField, t: f64) -> Result<ComplexField> {
    SpectralContext::new(*u.grid()).free_propagate(u, t)
}

/// One sample of the dispersive decay profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub time: f64,
    pub sup_norm: f64,
    /// `t^{d/2} · ‖e^{itΔ}u₀‖_∞`
    pub scaled: f64,
}

/// `(t, ‖e^{itΔ}u₀‖_∞, t^{d/2}‖e^{itΔ}u₀‖_∞)` for each requested time.
///
/// Times must be positive and increasing. The box must be large enough that
/// wrap-around is negligible up to the last time; that is the caller's call.
pub fn dispersive_decay_profile(u0: &ComplexField, times: &[f64]) -> Result<Vec<DecaySample>> {
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::param("times", "times must be positive and finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "times must be strictly increasing"));
    }
    let ctx = SpectralContext::new(*u0.grid());
    let half_d = 0.5 * u0.grid().dim() as f64;
    times
        .iter()
        .map(|&t| {
            let sup = ctx.free_propagate(u0, t)?.max_amplitude();
            Ok(DecaySample {
                time: t,
                sup_norm: sup,
                scaled: t.powf(half_d) * sup,
            })
        })
        .collect()
}

/// Least-squares slope of `log sup_norm` against `log t`.
pub fn fitted_decay_exponent(profile: &[DecaySample]) -> f64 {
    let n = profile.len() as f64;
    let xs: Vec<f64> = profile.iter().map(|s| s.time.ln()).collect();
    let ys: Vec<f64> = profile.iter().map(|s| s.sup_norm.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

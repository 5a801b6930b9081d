//! Periodic box discretization.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Uniform periodic grid on `[−L/2, L/2)^d` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    extent: f64,
    points: usize,
}

impl SpatialGrid {
    /// Builds a grid; `dim ∈ {1,2,3}`, `points` a power of two ≥ 16, `extent > 0`.
    pub fn new(dim: usize, extent: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if !points.is_power_of_two() || points < 16 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16 (got {points})"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive and finite (got {extent})"
            )));
        }
        Ok(SpatialGrid {
            dim,
            extent,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = L/N`.
    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates along one axis, `x_j = −L/2 + j h`.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points)
            .map(|j| -0.5 * self.extent + j as f64 * h)
            .collect()
    }

    /// Angular frequencies along one axis in FFT storage order:
    /// index `j` holds `2πk/L` with `k = j` for `j < N/2` and `k = j − N` otherwise.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points as isize;
        (0..n)
            .map(|j| {
                let k = if j < n / 2 { j } else { j - n };
                2.0 * PI * k as f64 / self.extent
            })
            .collect()
    }

    /// Multi-index of a flat row-major index (axis 0 slowest).
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    /// Evaluates `f(x)` at every grid point, `x` padded with zeros past `dim`.
    pub fn sample<T>(&self, mut f: impl FnMut([f64; 3]) -> T) -> Vec<T> {
        let axis = self.axis();
        (0..self.len())
            .map(|flat| {
                let idx = self.unflatten(flat);
                let mut x = [0.0; 3];
                for a in 0..self.dim {
                    x[a] = axis[idx[a]];
                }
                f(x)
            })
            .collect()
    }

    /// `|ξ|²` at every spectral index, in storage order.
    pub fn wavenumber_squared(&self) -> Vec<f64> {
        let freq = self.frequencies();
        (0..self.len())
            .map(|flat| {
                let idx = self.unflatten(flat);
                (0..self.dim).map(|a| freq[idx[a]] * freq[idx[a]]).sum()
            })
            .collect()
    }

    /// True where every axis frequency index satisfies `|k| < N/3` (2/3 rule).
    pub fn dealias_mask(&self) -> Vec<bool> {
        let n = self.points as isize;
        let cut = n / 3;
        (0..self.len())
            .map(|flat| {
                let idx = self.unflatten(flat);
                (0..self.dim).all(|a| {
                    let j = idx[a] as isize;
                    let k = if j < n / 2 { j } else { j - n };
                    k.abs() <= cut
                })
            })
            .collect()
    }
}

//! Complex-valued fields on a [`SpatialGrid`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grid::SpatialGrid;
use crate::{Error, Result};

/// Complex amplitude per grid point, row-major by axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: SpatialGrid) -> Self {
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: SpatialGrid, c: Complex64) -> Self {
        ComplexField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::param("values", format!("entry {i} is not finite")));
        }
        Ok(ComplexField { grid, values })
    }

    /// Samples `f(x)` on the grid.
    pub fn from_fn(grid: SpatialGrid, f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        ComplexField {
            grid,
            values: grid.sample(f),
        }
    }

    /// Isotropic Gaussian `amplitude · e^{−|x|²/(2 width²)}`.
    pub fn gaussian(grid: SpatialGrid, amplitude: f64, width: f64) -> Self {
        let w2 = width * width;
        Self::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::new(amplitude * (-0.5 * r2 / w2).exp(), 0.0)
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Discrete `L^p` norm with weight `h^d`; `p = ∞` gives the max modulus.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::param("p", format!("norm exponent must be >= 1 (got {p})")));
        }
        Ok(self.lp_norm_unchecked(p))
    }

    pub(crate) fn lp_norm_unchecked(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_amplitude();
        }
        let w = self.grid.cell_volume();
        if p == 2.0 {
            return (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt();
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s * w).powf(1.0 / p)
    }

    /// `‖u‖₂²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: Complex64, other: &ComplexField) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// `‖self − other‖₂`.
    pub fn l2_distance(&self, other: &ComplexField) -> Result<f64> {
        self.check_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// Pointwise multiplication by a real weight.
    pub fn weighted(&self, weight: &[f64]) -> ComplexField {
        debug_assert_eq!(weight.len(), self.values.len());
        let values = self
            .values
            .iter()
            .zip(weight)
            .map(|(v, w)| v * *w)
            .collect();
        ComplexField {
            grid: self.grid,
            values,
        }
    }

    /// Mass outside the centred ball `|x| ≤ L/4`, relative to total mass.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let r = 0.25 * self.grid.extent();
        let inside = self.grid.sample(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= r * r);
        let outside: f64 = self
            .values
            .iter()
            .zip(inside)
            .filter(|(_, inside)| !inside)
            .map(|(v, _)| v.norm_sqr())
            .sum();
        outside * self.grid.cell_volume() / total
    }

    pub(crate) fn check_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(l: f64) -> SpatialGrid {
        SpatialGrid::new(1, l, 16).unwrap()
    }

    #[test]
    fn constant_field_norms() {
        let u = ComplexField::constant(grid1(4.0), Complex64::new(2.0, 0.0));
        assert!((u.lp_norm(2.0).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(u.lp_norm(f64::INFINITY).unwrap(), 2.0);
        // ‖c‖_p = |c| L^{1/p}
        assert!((u.lp_norm(3.0).unwrap() - 2.0 * 4f64.powf(1.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn zero_field_norms() {
        let u = ComplexField::zeros(grid1(4.0));
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(u.lp_norm(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_small_exponent() {
        let u = ComplexField::zeros(grid1(4.0));
        assert!(u.lp_norm(0.5).is_err());
        assert!(u.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = grid1(1.0);
        assert!(ComplexField::from_values(g, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[4].im = f64::NAN;
        assert!(ComplexField::from_values(g, v).is_err());
    }

    #[test]
    fn interpolation_inequality() {
        let g = SpatialGrid::new(1, 20.0, 128).unwrap();
        let mut u = ComplexField::gaussian(g, 1.0, 1.3);
        let m = u.lp_norm(2.0).unwrap();
        u.scale(Complex64::new(1.0 / m, 0.0));
        let l2 = u.lp_norm(2.0).unwrap();
        let linf = u.lp_norm(f64::INFINITY).unwrap();
        for q in [2.5, 3.0, 4.0, 7.0, 20.0] {
            let theta = 2.0 / q;
            let lhs = u.lp_norm(q).unwrap();
            assert!(lhs <= l2.powf(theta) * linf.powf(1.0 - theta) * (1.0 + 1e-12));
        }
    }
}

//! Scattering diagnostic via the profile `v(t) = e^{−itΔ}u(t)`.

use alloc::vec::Vec;

use crate::field::ComplexField;
use crate::record::TrajectoryRecord;
use crate::spectral::SpectralContext;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPoint {
    pub time: f64,
    /// `‖v(t_{k+1}) − v(t_k)‖₂`; absent at the last checkpoint.
    pub cauchy_increment: Option<f64>,
    /// `‖v(t_k) − u⁺‖₂ = ‖u(t_k) − e^{it_kΔ}u⁺‖₂`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringReport {
    pub points: Vec<ScatteringPoint>,
    /// `u⁺ := v(t_K)`.
    pub asymptotic_state: ComplexField,
}

pub fn scattering_residual(rec: &TrajectoryRecord) -> Result<ScatteringReport> {
    rec.validate()?;
    let ctx = SpectralContext::new(rec.meta.grid);
    let profiles = rec
        .fields
        .iter()
        .enumerate()
        .map(|(k, u)| ctx.free_propagate(u, -rec.time(k)))
        .collect::<Result<Vec<_>>>()?;
    let plus = profiles.last().unwrap().clone();
    let mut points = Vec::with_capacity(profiles.len());
    for (k, v) in profiles.iter().enumerate() {
        let cauchy_increment = match profiles.get(k + 1) {
            Some(next) => Some(next.l2_distance(v)?),
            None => None,
        };
        points.push(ScatteringPoint {
            time: rec.time(k),
            cauchy_increment,
            residual: v.l2_distance(&plus)?,
        });
    }
    Ok(ScatteringReport {
        points,
        asymptotic_state: plus,
    })
}

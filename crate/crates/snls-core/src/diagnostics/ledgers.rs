use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::flows::DampingSpec;
use crate::record::TrajectoryRecord;
use crate::{Error, Result};

/// `max_k |m_k − m_0| / m_0`; zero for a zero initial field.
pub fn mass_ledger_check(rec: &TrajectoryRecord) -> f64 {
    let m0 = rec.mass[0];
    if m0 == 0.0 {
        return 0.0;
    }
    rec.mass
        .iter()
        .map(|m| (m - m0).abs() / m0)
        .fold(0.0, f64::max)
}

/// `max_k |m_k + D_k − m_0| / m_0` for damped records.
pub fn dissipation_ledger_check(rec: &TrajectoryRecord) -> Result<f64> {
    let d = rec
        .dissipation
        .as_ref()
        .ok_or(Error::MissingLedger("dissipation accumulator"))?;
    let m0 = rec.mass[0];
    if m0 == 0.0 {
        return Ok(0.0);
    }
    Ok(rec
        .mass
        .iter()
        .zip(d)
        .map(|(m, d)| (m + d - m0).abs() / m0)
        .fold(0.0, f64::max))
}

/// `‖|V|^{1/2} u(t_k)‖₂` at each checkpoint, using the record's potential.
pub fn local_mass_ledger(rec: &TrajectoryRecord) -> Result<Vec<f64>> {
    let v = DampingSpec::new(&rec.meta.grid, rec.meta.potential, rec.meta.gamma)?;
    let weight: Vec<f64> = v.v_squared().iter().map(|w| w.sqrt()).collect();
    Ok(rec
        .fields
        .iter()
        .map(|f| {
            let s: f64 = f
                .values()
                .iter()
                .zip(&weight)
                .map(|(u, w)| u.norm_sqr() * w)
                .sum();
            (s * rec.meta.grid.cell_volume()).sqrt()
        })
        .collect())
}

//! Quantities measured on trajectory records: space-time norms, ledgers,
//! maximal functions of the stochastic convolution, the Duhamel residual,
//! Burkholder ratios and scattering residuals.

mod burkholder;
mod duhamel;
mod ledgers;
mod maximal;
mod scattering;
mod strichartz;

pub use burkholder::{burkholder_ratio, BurkholderEstimate};
pub use duhamel::duhamel_residual;
pub use ledgers::{dissipation_ledger_check, local_mass_ledger, mass_ledger_check};
pub use maximal::{maximal_curve, maximal_function, maximal_function_on, MaximalRecord};
pub use scattering::{scattering_residual, ScatteringPoint, ScatteringReport};
pub use strichartz::{is_admissible, scalar_time_norm, strichartz_time_norm, Exponent, StrichartzPair};

use crate::flows::{DampedLinearStepper, DampingSpec, FlowParams, Potential};
use crate::record::{ModelKind, TrajectoryRecord};
use crate::Result;

/// Linear propagator `H` that the record's own equation splits off.
pub(crate) fn record_propagator(rec: &TrajectoryRecord) -> Result<DampedLinearStepper> {
    let meta = &rec.meta;
    let params = FlowParams::new(meta.grid, meta.dt)?;
    let damping = match meta.model {
        ModelKind::Nls => DampingSpec::new(&meta.grid, Potential::zero(), 0.0)?,
        ModelKind::DampedLinear | ModelKind::DampedNls => {
            DampingSpec::new(&meta.grid, meta.potential, meta.gamma)?
        }
        ModelKind::Snls | ModelKind::SnlsIto => rec.convolution_damping()?,
    };
    Ok(DampedLinearStepper::new(params, damping))
}

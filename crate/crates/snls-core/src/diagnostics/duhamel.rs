//! Consistency of a record with the mild form
//! `u(b) = H(b,a)u(a) − i∫_a^b H(b,s)|u|^σu ds − i∫_a^b H(b,s)(⟨s⟩^{−γ}Vu) dB_s`.
//!
//! `H` is the record's own linear propagator: free for NLS, the damped flow
//! for damped records, and the `½⟨t⟩^{−2γ}V²` flow for stochastic records
//! (the Itô correction drift). The Lebesgue integral uses the trapezoid rule
//! on checkpoints; the stochastic one uses the stored left-point blocks plus
//! their second-order correction.

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::field::ComplexField;
use crate::record::{ConvolutionWeight, ModelKind, TrajectoryRecord};
use crate::{Error, Result};

/// `‖u(b) − RHS(b)‖₂ / ‖u(b)‖₂` over the checkpoint window `[a, b]`.
pub fn duhamel_residual(rec: &TrajectoryRecord, window: (f64, f64)) -> Result<f64> {
    rec.validate()?;
    let (a, b) = window;
    let ia = rec
        .checkpoint_at(a)
        .ok_or_else(|| Error::param("window", alloc::format!("{a} is not a checkpoint")))?;
    let ib = rec
        .checkpoint_at(b)
        .ok_or_else(|| Error::param("window", alloc::format!("{b} is not a checkpoint")))?;
    if ib < ia {
        return Err(Error::param("window", "window end precedes its start"));
    }
    if ia == ib {
        return Ok(0.0);
    }
    let stochastic = matches!(rec.meta.model, ModelKind::Snls | ModelKind::SnlsIto);
    let blocks = match (&rec.convolution, stochastic) {
        (Some(c), true) if c.weight == ConvolutionWeight::Potential => Some(c),
        (Some(_), true) => {
            return Err(Error::param("convolution", "Duhamel reconstruction needs the V-weighted ledger"))
        }
        (None, true) => return Err(Error::MissingLedger("stochastic-convolution increments")),
        _ => None,
    };
    let h = super::record_propagator(rec)?;
    let nonlinear = rec.meta.model.is_nonlinear();
    let minus_i = Complex64::new(0.0, -1.0);

    let mut w = rec.fields[ia].clone();
    for j in ia..ib {
        let half = 0.5 * (rec.time(j + 1) - rec.time(j));
        if nonlinear {
            w.axpy(minus_i * half, &nonlinearity(&rec.fields[j]))?;
        }
        h.propagate_steps(&mut w, rec.steps[j], rec.steps[j + 1])?;
        if nonlinear {
            w.axpy(minus_i * half, &nonlinearity(&rec.fields[j + 1]))?;
        }
        if let Some(c) = blocks {
            w.axpy(minus_i, &c.ito[j])?;
            w.axpy(minus_i, &c.milstein[j])?;
        }
    }
    let target = &rec.fields[ib];
    let norm = target.lp_norm_unchecked(2.0);
    let err = target.l2_distance(&w)?;
    Ok(if norm > 0.0 { err / norm } else { err })
}

/// `|u|^{4/d} u`.
fn nonlinearity(u: &ComplexField) -> ComplexField {
    let dim = u.grid().dim();
    let mut out = u.clone();
    for v in out.values_mut() {
        let r2 = v.norm_sqr();
        let pow = match dim {
            1 => r2 * r2,
            2 => r2,
            _ => r2.powf(2.0 / 3.0),
        };
        *v *= pow;
    }
    out
}

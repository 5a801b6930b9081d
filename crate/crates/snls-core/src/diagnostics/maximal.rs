//! Discrete maximal function of the stochastic convolution,
//! `M(t) = sup_{r₁ ≤ r₂ ≤ t} ‖Σ_{r₁ ≤ t_k < r₂} H(t, t_k) incr_k‖_{L^β}`,
//! with `r₁, r₂` ranging over checkpoints. This is a lower bound for the
//! continuum supremum and grows under checkpoint refinement.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::field::ComplexField;
use crate::record::TrajectoryRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalRecord {
    pub time: f64,
    pub value: f64,
    pub beta: f64,
}

/// `M(t_J)` for every checkpoint `J`.
pub fn maximal_curve(rec: &TrajectoryRecord, beta: f64) -> Result<Vec<MaximalRecord>> {
    let all: Vec<usize> = (0..rec.len()).collect();
    curve(rec, beta, rec.len() - 1, &all)
}

/// `M(t)` at a checkpoint time `t`.
pub fn maximal_function(rec: &TrajectoryRecord, beta: f64, t: f64) -> Result<MaximalRecord> {
    let all: Vec<usize> = (0..rec.len()).collect();
    maximal_function_on(rec, beta, t, &all)
}

/// `M(t)` with `r₁, r₂` restricted to the listed checkpoint indices.
pub fn maximal_function_on(rec: &TrajectoryRecord, beta: f64, t: f64, nodes: &[usize]) -> Result<MaximalRecord> {
    let j = rec
        .checkpoint_at(t)
        .ok_or_else(|| Error::param("t", alloc::format!("{t} is not a checkpoint time")))?;
    Ok(*curve(rec, beta, j, nodes)?.last().unwrap())
}

fn curve(rec: &TrajectoryRecord, beta: f64, last: usize, nodes: &[usize]) -> Result<Vec<MaximalRecord>> {
    if !(beta >= 1.0) {
        return Err(Error::param("beta", "exponent must be >= 1"));
    }
    rec.validate()?;
    let ledger = rec
        .convolution
        .as_ref()
        .ok_or(Error::MissingLedger("stochastic-convolution increments"))?;
    let h = super::record_propagator(rec)?;
    let grid = rec.meta.grid;
    let one = Complex64::new(1.0, 0.0);

    let mut is_node = alloc::vec![false; rec.len()];
    for &n in nodes {
        if n < rec.len() {
            is_node[n] = true;
        }
    }
    // prefixes[m] = Σ_{j<m} H(t_J, c_{j+1}) block_j, kept only at node indices
    // fields[0] is the running sum, fields[1..] the prefixes
    let mut fields: Vec<ComplexField> = alloc::vec![ComplexField::zeros(grid)];
    let mut out = Vec::with_capacity(last + 1);
    for j in 0..=last {
        if j > 0 {
            let (k0, k1) = (rec.steps[j - 1], rec.steps[j]);
            h.propagate_steps_many(&mut fields, k0, k1)?;
            fields[0].axpy(one, &ledger.ito[j - 1])?;
        }
        if is_node[j] {
            let running = fields[0].clone();
            fields.push(running);
        }
        let prefixes = &fields[1..];
        let mut best = 0.0f64;
        for a in 0..prefixes.len() {
            for b in a + 1..prefixes.len() {
                let diff = prefixes[b].sub(&prefixes[a])?;
                best = best.max(diff.lp_norm_unchecked(beta));
            }
        }
        out.push(MaximalRecord {
            time: rec.time(j),
            value: best,
            beta,
        });
    }
    Ok(out)
}

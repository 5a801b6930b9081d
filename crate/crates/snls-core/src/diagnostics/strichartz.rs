//! Strichartz admissibility and discrete space-time norms.

use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::{ToPrimitive, Zero};

use crate::record::TrajectoryRecord;
use crate::{Error, Result};

/// Lebesgue exponent, exact when finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Ratio<i64>),
    Infinite,
}

impl Exponent {
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Exponent::Finite(Ratio::new(numer, denom))
    }

    pub fn integer(n: i64) -> Self {
        Exponent::Finite(Ratio::from_integer(n))
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// `1/p`, zero at infinity.
    pub fn reciprocal(&self) -> Ratio<i64> {
        match self {
            Exponent::Finite(r) if !r.is_zero() => r.recip(),
            Exponent::Finite(_) => Ratio::from_integer(i64::MAX),
            Exponent::Infinite => Ratio::zero(),
        }
    }

    fn at_least_two(&self) -> bool {
        match self {
            Exponent::Finite(r) => *r >= Ratio::from_integer(2),
            Exponent::Infinite => true,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Exponent::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    /// Accepts `inf`, integers, fractions `a/b` and finite decimals.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("exponent", alloc::format!("cannot parse `{s}`"));
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::Infinite);
        }
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            return Ok(Exponent::ratio(a, b));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 12 || !frac.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let denom = 10i64.pow(frac.len() as u32);
            let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            let sign = if int.starts_with('-') { -1 } else { 1 };
            return Ok(Exponent::ratio(whole * denom + sign * part, denom));
        }
        s.parse::<i64>().map(Exponent::integer).map_err(|_| bad())
    }
}

/// Time exponent `q` and space exponent `p` of an `L_t^q L_x^p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrichartzPair {
    pub time: Exponent,
    pub space: Exponent,
}

impl StrichartzPair {
    pub fn new(time: Exponent, space: Exponent) -> Self {
        StrichartzPair { time, space }
    }

    /// `(14/d, 14/5)`: `(14/3, 14/5)` in three dimensions, and the admissible
    /// pair with the same space exponent otherwise.
    pub fn default_for(dim: usize) -> Self {
        StrichartzPair::new(Exponent::ratio(14, dim as i64), Exponent::ratio(14, 5))
    }

    pub fn is_admissible(&self, dim: usize) -> bool {
        is_admissible(self.time, self.space, dim)
    }
}

/// `2/q + d/p = d/2` with `q, p ≥ 2` and `(q, p, d) ≠ (2, ∞, 2)`, in exact
/// rational arithmetic.
pub fn is_admissible(q: Exponent, p: Exponent, dim: usize) -> bool {
    if !(q.at_least_two() && p.at_least_two()) {
        return false;
    }
    if dim == 2 && q == Exponent::integer(2) && p == Exponent::Infinite {
        return false;
    }
    let d = Ratio::from_integer(dim as i64);
    Ratio::from_integer(2) * q.reciprocal() + d * p.reciprocal() == d / Ratio::from_integer(2)
}

/// `(Σ_{a ≤ t_k < b} ‖u(t_k)‖_p^q Δt_k)^{1/q}` with left-endpoint weights
/// `Δt_k = min(t_{k+1}, b) − t_k`; for `q = ∞` the max over `t_k ∈ [a, b]`.
pub fn strichartz_time_norm(rec: &TrajectoryRecord, pair: StrichartzPair, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param("window", "window must be finite"));
    }
    let times = rec.times();
    let last = *times.last().unwrap_or(&0.0);
    let tol = 1e-9 * last.max(1.0);
    if a < -tol || b > last + tol {
        return Err(Error::param("window", alloc::format!("[{a}, {b}] outside record range [0, {last}]")));
    }
    let p = pair.space.value();
    if pair.time == Exponent::Infinite {
        return Ok(times
            .iter()
            .zip(&rec.fields)
            .filter(|(t, _)| **t >= a - tol && **t <= b + tol)
            .map(|(_, f)| f.lp_norm_unchecked(p))
            .fold(0.0, f64::max));
    }
    let q = pair.time.value();
    let mut sum = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let t = times[k];
        if t < a - tol || t >= b - tol {
            continue;
        }
        let width = times[k + 1].min(b) - t;
        sum += rec.fields[k].lp_norm_unchecked(p).powf(q) * width;
    }
    Ok(sum.powf(1.0 / q))
}

/// Left-endpoint `L_t^q` norm of a scalar series sampled at `times`.
pub fn scalar_time_norm(times: &[f64], values: &[f64], q: Exponent) -> f64 {
    if q == Exponent::Infinite {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let qv = q.value();
    let s: f64 = times
        .windows(2)
        .zip(values)
        .map(|(w, v)| v.abs().powf(qv) * (w[1] - w[0]))
        .sum();
    s.powf(1.0 / qv)
}

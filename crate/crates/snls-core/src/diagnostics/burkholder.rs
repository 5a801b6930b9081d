//! Monte Carlo check of the Burkholder moment inequality for scalar
//! integrands:
//! `‖sup_{a≤b≤T} |∫_a^b σ dB|‖_{L_ω^ρ}` against `‖(∫_0^T σ² ds)^{1/2}‖_{L_ω^ρ}`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::stochastic::BrownianPath;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurkholderEstimate {
    pub rho: f64,
    /// `(E sup|∫σ dB|^ρ)^{1/ρ}`
    pub lhs: f64,
    /// `(E (∫σ² ds)^{ρ/2})^{1/ρ}`
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when both vanish.
    pub ratio: f64,
    /// Standard error of `ratio²` from the sample variance of `sup^ρ`
    /// (delta method, `rhs` treated as exact).
    pub ratio_sq_stderr: f64,
}

/// `integrand(k, history)` returns `σ(t_k)` given the increments `ΔB_0..ΔB_{k−1}`
/// of the same path, so adaptedness holds by construction.
pub fn burkholder_ratio<F>(paths: &[BrownianPath], rho: f64, integrand: F) -> Result<BurkholderEstimate>
where
    F: Fn(usize, &[f64]) -> f64,
{
    if !(rho >= 2.0 && rho.is_finite()) {
        return Err(Error::param("rho", "moment must lie in [2, ∞)"));
    }
    if paths.is_empty() {
        return Err(Error::Empty("Brownian paths"));
    }
    let mut sup_pow = Vec::with_capacity(paths.len());
    let mut quad_pow = Vec::with_capacity(paths.len());
    for path in paths {
        let inc = path.increments();
        let dt = path.dt();
        let (mut s, mut run_max, mut run_min, mut best, mut quad) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..inc.len() {
            let sigma = integrand(k, &inc[..k]);
            s += sigma * inc[k];
            quad += sigma * sigma * dt;
            run_max = run_max.max(s);
            run_min = run_min.min(s);
            best = best.max(s - run_min).max(run_max - s);
        }
        sup_pow.push(best.powf(rho));
        quad_pow.push(quad.powf(0.5 * rho));
    }
    let n = paths.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let m_sup = mean(&sup_pow);
    let m_quad = mean(&quad_pow);
    let lhs = m_sup.powf(1.0 / rho);
    let rhs = m_quad.powf(1.0 / rho);
    if rhs == 0.0 {
        return Ok(BurkholderEstimate {
            rho,
            lhs,
            rhs,
            ratio: 0.0,
            ratio_sq_stderr: 0.0,
        });
    }
    let var = if paths.len() > 1 {
        sup_pow.iter().map(|x| (x - m_sup) * (x - m_sup)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let se_m = (var / n).sqrt();
    // ratio² = (m_sup / m_quad)^{2/ρ}
    let ratio_sq = (m_sup / m_quad).powf(2.0 / rho);
    let ratio_sq_stderr = if m_sup > 0.0 { ratio_sq * (2.0 / rho) * se_m / m_sup } else { 0.0 };
    Ok(BurkholderEstimate {
        rho,
        lhs,
        rhs,
        ratio: lhs / rhs,
        ratio_sq_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::StreamKey;

    fn paths(n: u64, seed: u64) -> Vec<BrownianPath> {
        (0..n)
            .map(|i| BrownianPath::sample(StreamKey::new(seed, i), 1e-3, 1.0).unwrap())
            .collect()
    }

    #[test]
    fn zero_integrand_reports_zero() {
        let est = burkholder_ratio(&paths(4, 1), 2.0, |_, _| 0.0).unwrap();
        assert_eq!(est.ratio, 0.0);
    }

    #[test]
    fn rejects_bad_moments() {
        let p = paths(2, 1);
        assert!(burkholder_ratio(&p, 1.5, |_, _| 1.0).is_err());
        assert!(burkholder_ratio(&p, f64::INFINITY, |_, _| 1.0).is_err());
        assert!(burkholder_ratio(&[], 2.0, |_, _| 1.0).is_err());
    }

    #[test]
    fn unit_integrand_ratio_near_range_moment() {
        // E[(max B − min B)²] = 4 ln 2 · T for Brownian motion on [0, T]
        let est = burkholder_ratio(&paths(1024, 3), 2.0, |_, _| 1.0).unwrap();
        assert!((est.rhs - 1.0).abs() < 1e-9);
        let r2 = est.ratio * est.ratio;
        let target = 4.0 * core::f64::consts::LN_2;
        // discrete monitoring biases the range down by O(√dt)
        assert!((r2 - target).abs() < 4.0 * est.ratio_sq_stderr + 0.1, "r2 {r2}");
    }

    #[test]
    fn adapted_integrand_sees_only_history() {
        let p = paths(8, 5);
        let est = burkholder_ratio(&p, 2.0, |k, hist| {
            assert_eq!(hist.len(), k);
            1.0 + hist.iter().sum::<f64>().abs().min(1.0)
        })
        .unwrap();
        assert!(est.ratio > 0.0);
    }
}

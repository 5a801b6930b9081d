//! Radix-2 complex FFT and its separable n-dimensional extension.
//!
//! Convention: the forward transform is unnormalized,
//! `û_k = Σ_j u_j e^{−2πi jk/N}`, and the inverse carries the full `1/N^d`.
//! With quadrature weight `h^d` the discrete Parseval identity reads
//! `Σ|u_j|² h^d = (h^d / N^d) Σ|û_k|²`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Precomputed twiddles and bit-reversal permutation for one length.
#[derive(Debug, Clone)]
pub struct Radix2Plan {
    len: usize,
    twiddles: Vec<Complex64>,
    inverse_twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Radix2Plan {
    /// `len` must be a power of two.
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "FFT length must be a power of two");
        let twiddles: Vec<Complex64> = (0..len / 2)
            .map(|k| {
                let (s, c) = (-2.0 * PI * k as f64 / len as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        let inverse_twiddles = twiddles.iter().map(|w| w.conj()).collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Radix2Plan {
            len,
            twiddles,
            inverse_twiddles,
            bitrev,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unnormalized transform; `inverse` flips the exponent sign only.
    pub fn process(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.len;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let table = if inverse { &self.inverse_twiddles } else { &self.twiddles };
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let t = *b * table[k * stride];
                    *b = *a - t;
                    *a += t;
                }
            }
            half *= 2;
        }
    }
}

/// Separable transform over a row-major `N^d` array.
#[derive(Debug, Clone)]
pub struct FftNd {
    plan: Radix2Plan,
    dim: usize,
}

impl FftNd {
    pub fn new(points: usize, dim: usize) -> Self {
        FftNd {
            plan: Radix2Plan::new(points),
            dim,
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Inverse transform including the `1/N^d` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.plan.len();
        debug_assert_eq!(data.len(), n.pow(self.dim as u32));
        let mut line = if self.dim > 1 { vec![Complex64::new(0.0, 0.0); n] } else { Vec::new() };
        for axis in 0..self.dim {
            // stride between consecutive samples along `axis`
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    self.plan.process(chunk, inverse);
                }
                continue;
            }
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    self.plan.process(&mut line, inverse);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }
}

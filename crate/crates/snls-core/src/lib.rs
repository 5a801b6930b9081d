//! Numerical core for the stochastic mass-critical nonlinear Schrödinger
//! equation with decaying multiplicative noise
//!
//! ```text
//! du = i(Δu − |u|^{4/d} u) dt − i⟨t⟩^{−γ} V u dB_t − ½⟨t⟩^{−2γ} V² u dt
//! ```
//!
//! on a periodic box. The crate is `no_std` (it needs `alloc`) and holds only
//! pure numerics: grids and fields, the pseudospectral free propagator,
//! Strang-split deterministic/damped/stochastic steppers, trajectory records
//! and the diagnostics computed from them. File formats, the CLI and the
//! parallel ensemble runner live in the `snls-lab` crate.
//!
//! Sign convention used throughout:
//!
//! ```text
//! i∂ₜu + Δu = |u|^σ u − i⟨t⟩^{−2ε₀} V² u,    σ = 4/d
//! ```
//!
//! so the free propagator is `e^{itΔ}` with Fourier symbol `e^{−it|ξ|²}` and
//! the damping term removes mass at rate `2∫⟨t⟩^{−2ε₀}V²|u|²`.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod diagnostics;
pub mod ensemble;
mod error;
pub mod fft;
pub mod field;
pub mod flows;
pub mod grid;
pub mod record;
pub mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
pub use field::ComplexField;
pub use grid::SpatialGrid;
pub use num_complex::Complex64;
pub use record::TrajectoryRecord;

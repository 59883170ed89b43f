//! Monte Carlo simulation of the decay of OAM entanglement when one or both
//! photons of a Bell pair cross a single Kolmogorov phase screen.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiations.

// Index loops read best for 4x4 matrix algebra; `!(x > 0)` is used on
// purpose to reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod export;
pub mod grid;
pub mod modes;
pub mod quantum;
pub mod scalar;
pub mod seed;
pub mod turbulence;

pub use error::{OamError, Result};
pub use scalar::Real;

pub type Field = grid::SampledField<f64>;
pub type Field32 = grid::SampledField<f32>;
pub type Screen = turbulence::PhaseScreen<f64>;
pub type Screen32 = turbulence::PhaseScreen<f32>;
pub type Generator = turbulence::ScreenGenerator<f64>;
pub type Generator32 = turbulence::ScreenGenerator<f32>;
pub type DensityMatrix = quantum::TwoQubitDensityMatrix<f64>;
pub type DensityMatrix32 = quantum::TwoQubitDensityMatrix<f32>;
pub type Coefficients = quantum::ModalCoefficients<f64>;
pub type PureState = quantum::ProjectedPureState<f64>;
pub type Projector = experiments::QubitProjector<f64>;

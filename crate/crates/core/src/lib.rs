//! Transfer of whole-space Navier–Stokes solutions to a ball: periodic
//! spectral solver, radial cutoff and annulus partition, Bogovskii
//! correction, forcing residuals, Stokes-mode Galerkin solve, and the
//! constants and envelopes that tie them together.

pub mod ballquad;
pub mod band;
pub mod bessel;
pub mod bogovskii;
pub mod config;
pub mod constants;
pub mod correction;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod flow;
pub mod forcing;
pub mod galerkin;
pub mod grid;
pub mod initial;
pub mod localization;
pub mod norms;
pub mod pipeline;
pub mod quadrature;
pub mod reduce;
pub mod scalar;
pub mod smoothstep;
pub mod snapshot;
pub mod tables;
pub mod solver;
pub mod stokes;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::GridSpec;
pub use scalar::Real;
pub use spectral::{Fft3, SpectralField};

pub type VectorField64 = VectorField<f64>;
pub type VectorField32 = VectorField<f32>;
pub type ScalarField64 = ScalarField<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type SpectralField64 = SpectralField<f64>;
pub type SpectralField32 = SpectralField<f32>;
pub type Solver64 = solver::NseSolver<f64>;
pub type Solver32 = solver::NseSolver<f32>;

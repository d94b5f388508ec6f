//! Squeezed-light generation in lossy coupled-microring photonic molecules.
//!
//! The pipeline runs from a [`model::SystemConfig`] through the linear network
//! ([`network`]), nonlinear couplings ([`nonlinear`]), classical pumps ([`pump`]),
//! the linearized quantum propagator ([`propagator`]) and Gaussian-state analysis
//! ([`gaussian`]). [`scenarios`] wires these into the two worked examples.

pub mod config;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod model;
pub mod network;
pub mod nonlinear;
pub mod propagator;
pub mod pump;
pub mod scenarios;
pub mod svg;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

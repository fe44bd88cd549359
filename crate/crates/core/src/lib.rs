//! Quantum-mechanical model of a common-source low noise amplifier treated as
//! two coupled, driven oscillators.
//!
//! The pipeline runs [`params`] → [`appendix_a`] → [`fockspace`] →
//! [`spectra`] / [`response`]. Everything is plain `f64`/[`Complex64`]
//! arithmetic on immutable values, so any stage can be shared across threads.
//!
//! [`Complex64`]: num_complex::Complex64

pub mod appendix_a;
pub mod error;
pub mod fockspace;
pub mod params;
pub mod response;
pub mod spectra;
pub mod units;
pub mod validate;

pub use appendix_a::{AppendixAConstants, EvaluationMode};
pub use error::{Error, Result};
pub use params::CircuitParams;

//! Leggett-Garg inequality correlators for electron transport through a
//! double quantum dot, with and without coupling to biased fermionic
//! reservoirs.
//!
//! The library computes the three- and four-time correlator combinations
//! `C3 = C21 + C32 - C31` and `C4 = C21 + C32 + C43 - C41` for local charge
//! detection on the second dot, using
//!
//! * closed-form propagators for the isolated dot pair ([`closed`]),
//! * exact nonequilibrium Green's functions obtained from the quantum
//!   Langevin equation for the reservoir-coupled device ([`greens`],
//!   [`kernels`]),
//! * a brute-force finite-bath oracle based on Wick factorization
//!   ([`oracle`]) used to validate the Green's-function pipeline.
//!
//! Units: all energies are multiples of a reference tunneling rate, times
//! are in inverse units of that rate, and `ħ = 1`.

pub mod cli;
pub mod closed;
mod error;
pub mod greens;
pub mod kernels;
pub mod lgi;
mod mat2;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// 2x2 complex matrix (dot-space operators, propagators, kernels).
pub type CMat2 = nalgebra::Matrix2<C64>;
/// 2x2 real matrix (lead coupling strengths).
pub type RMat2 = nalgebra::Matrix2<f64>;

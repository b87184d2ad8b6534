//! Pair correlation of the Sine-beta process and the one-point density of
//! the HP(beta, delta) process.
//!
//! Three independent engines live here:
//!
//! * [`series`]: the exact entire-function expansion of
//!   `q(λ) = (E[exp(i k α_λ(0))])_{k=1..n}` for integer `δ = n`;
//! * [`ode`]: direct integration of the linear ODE system satisfied by `q`;
//! * [`sde`]: Euler–Maruyama simulation of the `α_λ` diffusion, valid for
//!   every `β > 0, δ > 0`.
//!
//! [`closed_forms`] carries the classical explicit curves (β = 2, β = 4,
//! δ = 1) used as oracles, [`special`] and [`linalg`] the scalar functions
//! and structured matrices shared by all of them.
//!
//! The crate is `no_std` (it needs `alloc`). Threading, file formats and the
//! command-line front end live in the companion `sinebeta` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod closed_forms;
pub mod error;
pub mod linalg;
pub mod mpfloat;
pub mod ode;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod series;
pub mod special;
pub mod table;

pub use error::{Error, Result};

/// `1 / (2π)`, the density of the Sine-beta process.
pub const INV_TWO_PI: f64 = 0.5 * core::f64::consts::FRAC_1_PI;

/// `1 / (4π²)`, the large-distance limit of the pair correlation.
pub const INV_FOUR_PI_SQ: f64 = INV_TWO_PI * INV_TWO_PI;

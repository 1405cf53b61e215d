//! Fractional Brownian motion market models with Riemann-sum stochastic
//! integration.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`driver`]: the two-sided standard Brownian driver, sampled on a uniform
//!   grid over `[0, T]` and a graded mesh over the history `[-L, 0]`.
//! * [`fbm`]: the Mandelbrot–Van Ness moving-average synthesis of `B_H` from
//!   a driver, the truncation rule for the history, and the fBm covariance.
//! * [`cholesky`]: an exact-law generator used as an oracle for [`fbm`].
//! * [`decompose`]: the split `B_H(t) - B_H(s) = W(t) + R(t)` into the part
//!   driven by future increments and the part carried over from the past,
//!   together with the mean-square derivative of the latter.
//! * [`integrator`]: left-point Riemann sums, quadratic variation and the
//!   fractional operator mapping integrands to Brownian representation
//!   weights.
//! * [`market`]: the Bachelier-type market, strategy classes with enforced
//!   information windows, and wealth bookkeeping.
//!
//! Everything here is a pure function of its inputs. IO, parallel replicate
//! execution and file formats live in the `fbmarb` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cholesky;
pub mod decompose;
pub mod driver;
mod error;
pub mod fbm;
pub mod grid;
pub mod integrator;
pub mod market;
pub mod math;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{HurstParam, TimeGrid};

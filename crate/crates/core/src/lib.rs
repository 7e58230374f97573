//! Effective diffusion coefficients for quasi-one-dimensional diffusion in
//! channels built over the normal bundle of a plane curve.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: plane curves in the complex plane, Frenet frames, focal
//!   points and offset curvature.
//! * [`channel`]: channels `φ(u,v) = α(u) + s(u,v)N(u)` over a base curve,
//!   their walls, Jacobian, area density and the effective density/flux
//!   functionals.
//! * [`steiner`]: the complex-analytic function whose imaginary part is
//!   constant on two given circles.
//! * [`estimators`]: zeroth-order, tangent-line and curvature-circle
//!   estimators plus the classical straight-channel formulas.
//! * [`oracle`]: a finite-difference solver of the full steady problem used
//!   as ground truth, and a 1-D Fick-Jacobs steady solver.
//! * [`config`] / [`commands`]: experiment configuration and CSV output
//!   driving the `curveflux` binary.
//!
//! Data-parallel loops go through [`par::Exec`]; with the `parallel` feature
//! disabled everything runs sequentially and produces identical bytes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod branch;
pub mod channel;
pub mod commands;
pub mod config;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod oracle;
pub mod par;
pub mod steiner;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

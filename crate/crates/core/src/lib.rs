//! Plasmon-mediated superradiance of two-level emitters around a Drude metal
//! nanosphere.
//!
//! The crate builds collective decay and shift matrices from the quasi-static
//! Green tensor of the sphere (directly, or through a Lorentzian pseudo-mode
//! decomposition), solves the classical coupled-dipole eigenproblem, and
//! integrates the Lindblad master equation of the emitters to obtain
//! cooperative emission traces and Dicke-ladder rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod greens;
pub mod lindblad;
pub mod modes;
mod parallel;
pub mod rates;
pub mod units;

pub use error::{Error, Result};

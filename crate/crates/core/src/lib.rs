//! Borel-plane integral equation for the periodic 3-D Navier-Stokes equations.
//!
//! The velocity is written as `v̂(k,t) = v̂₀(k) + ∫₀^∞ Û(k,q) e^{-q/tⁿ} dq`; the
//! crate computes `Û` on a finite `q` interval, resums it, and turns the
//! computed data into existence-time estimates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod borel_kernel;
pub mod certifier;
pub mod error;
mod fft;
pub mod forcing;
pub mod marcher;
pub mod quad;
pub mod special_functions;
pub mod spectral_field;
pub mod startup;
pub mod synthesis;
mod tensor;

pub use error::{Error, Result};

//! Gap-dependent drag-coefficient models for homogeneous vehicle platoons
//! and the power-based fuel analysis built on them.
//!
//! The drag ratio of a platooning vehicle follows a power law in the
//! inter-vehicle distance gap up to a critical gap, beyond which the vehicle
//! behaves as if isolated. This crate fits those curves from drag or fuel
//! measurements ([`fit`]), converts fuel-reduction data into equivalent drag
//! ratios ([`invert`]), and turns fitted models into fuel-savings, headway
//! and capacity figures ([`analysis`]).

// Validation deliberately writes `!(v > 0.0)` so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod drag;
mod error;
pub mod fit;
pub mod fixtures;
pub mod fuel;
pub mod invert;
pub mod io;
pub mod reproduce;
pub mod types;

pub use error::{Error, Result};

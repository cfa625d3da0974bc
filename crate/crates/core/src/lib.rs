//! Toolkit for planar surface-code memories coupled to a critical bath:
//! stabilizer layout and contour decoding, bath correlators, Wick matching
//! sums, the Kondo/KT renormalization flow, closed-form lifetimes, and
//! deterministic parameter sweeps.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod error;
pub mod format;
pub mod lifetimes;
mod ode;
pub mod rg;
pub mod surface_code;
pub mod sweep;
pub mod wick;

pub use error::{Error, Result};

//! Spontaneous parametric down-conversion in one-dimensional nonlinear
//! photonic-band-gap stacks.
//!
//! Lengths are in nm, times in fs and angular frequencies in rad/fs.

pub mod em;
pub mod error;
pub mod materials;
pub mod observables;
pub mod pump;
pub mod spdc;
pub mod structure;
pub mod units;

pub use error::{Error, Result};

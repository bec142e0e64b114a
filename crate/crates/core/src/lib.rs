//! Modeling, fitting and loss budgeting for fiber Bragg-grating nanofiber
//! cavities.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorption;
pub mod budget;
pub mod coop;
pub mod error;
pub mod fit;
pub mod mode;
pub mod quantity;
pub mod special;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use quantity::{render, render_percent, Precision, Quantity};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

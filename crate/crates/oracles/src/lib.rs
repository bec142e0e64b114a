//! Brute-force reference solvers for cross-checking the fast paths in
//! `fibercav-core`. Everything here is deliberately simple and slow, and
//! shares no numerical code with the crate under test.

pub mod band;
pub mod bessel;
pub mod fd_mode;
pub mod grating;
pub mod mode_area;

pub use fd_mode::{fd_effective_index, fd_effective_index_extrapolated, FdMode};
pub use grating::{bisect_coupling, rk4_grating_reflectance};
pub use mode_area::trapezoid_mode_area;

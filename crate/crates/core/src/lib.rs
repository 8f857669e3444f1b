//! Spin-resolved quantum kinetic and drift-diffusion solvers for a 2D
//! electron gas with Rashba spin-orbit coupling.

pub mod error;
pub mod grid;
pub mod kinetic;
pub mod moyal;
pub mod pauli;
pub mod qdd;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

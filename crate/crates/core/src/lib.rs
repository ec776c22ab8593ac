//! Numerical laboratory for the generalized Camassa-Holm equation
//!
//! ```text
//! u_t - u_txx = d_x (2 + d_x) [(2 - d_x) u]^2,     m = u - u_xx
//! ```
//!
//! on a periodic box standing in for the real line.

pub mod error;
pub mod corpus;
pub mod grid;
pub mod littlewood_paley;
pub mod dynamics;
pub mod transport_picard;
pub mod peakon_weak;
pub mod blowup_lab;

pub use error::{Error, Result};
pub use grid::{Grid1D, RealField, SpectralField};

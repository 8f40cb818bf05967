//! Minimal-energy spectral supports for soliton condensates.
//!
//! Pipeline: anchors → Boutroux differential ([`boutroux`]) → traced
//! spectrum ([`tracer`]) → equilibrium measure and energies
//! ([`equilibrium`]) → optimality checks ([`verify`]).

pub mod artifacts;
pub mod boutroux;
pub mod cli;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod geom;
pub mod panels;
pub mod pipeline;
pub mod quad;
pub mod tracer;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

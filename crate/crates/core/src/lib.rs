//! Chemotaxis-driven pattern formation in reaction-diffusion models.
//!
//! Finite-difference simulation of the spatial MOMOS and Mimura-Tsujikawa
//! chemotaxis systems with first-order symplectic/IMSP integrators, linear
//! stability analysis, and piecewise Dynamic Mode Decomposition of the
//! resulting snapshot datasets.

pub mod cli;
pub mod dataset;
pub mod discretization;
pub mod dmd;
pub mod error;
pub mod grid;
pub mod integrators;
pub mod linsolve;
pub mod manifest;
pub mod models;
pub mod pdmd;
pub mod presets;
pub mod sparse;

pub use error::{Error, Result};
pub use grid::Grid2D;

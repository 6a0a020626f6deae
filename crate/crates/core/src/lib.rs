//! Fourth-order ghost-point finite differences for steady convection-diffusion
//! problems on domains described by a level set.
//!
//! The pipeline is: [`geometry`] classifies grid nodes and projects ghosts
//! onto the boundary, [`stencils`] selects a stencil per ghost,
//! [`boundary_ops`] turns it into a boundary equation, [`assembly`] and
//! [`solve`] build and solve the sparse system, and [`analysis`] measures the
//! error against a [`benchmarks`] solution.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod benchmarks;
pub mod boundary_ops;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod solve;
pub mod stencils;

pub use error::{Error, Result};

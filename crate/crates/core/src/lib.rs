//! Discrete-to-continuum numerics for head-to-tail symmetric lattice spin
//! systems: Q-tensor algebra, relaxed and homogenized energy densities,
//! lattice interpolations, discrete energies in several scalings, recovery
//! constructions and vortex diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod envelope;
pub mod error;
pub mod geometry;
pub mod homogenize;
pub mod io;
pub mod lattice;
pub mod numeric;
pub mod qtensor;
pub mod vortex;

pub use error::{Error, Result};

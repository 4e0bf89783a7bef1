//! Finite-volume simulator and analysis toolkit for four-component
//! chemotaxis-haptotaxis systems with a non-motile signal producer.
//!
//! - [`model`]: pluggable kinetics and the structural-hypothesis checker
//! - [`grid`]: cell-centered fields, stencils, initial data, snapshot files
//! - [`solver`]: IMEX stepping, implicit diffusion, run orchestration
//! - [`diagnostics`]: energy functionals, bound checks, constant fitting
//! - [`experiments`]: JSON scenarios and the command-line workflows

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod model;
pub mod solver;

pub use error::{Error, Result};

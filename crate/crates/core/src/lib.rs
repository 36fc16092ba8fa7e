//! Numerical continuation and bifurcation analysis for elliptic PDE systems
//! on rectangles, discretized with P1 finite elements.

// `!(x > 0.0)` is the NaN-rejecting form; index loops mirror the stencils
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod continuation;
pub mod demos;
pub mod error;
pub mod fem;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod periodic;
pub mod plot;
pub mod problem;
pub mod sparse;
pub mod spcont;
pub mod switching;
pub mod timeint;

pub use error::{Error, Result};

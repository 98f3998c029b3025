//! Numerical toolkit for a critically coupled Hartree system on R^N.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubbles;
pub mod error;
pub mod quad;
pub mod radial;
pub mod riesz;
pub mod solver;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use radial::{make_grid, OffsetFn, OffsetPair, Pair, RadialFn, RadialGrid, Tail};

//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use hartree_core::bubbles::{bubble_constant, bubble_profile, coupling_constants, CouplingConstants};
use hartree_core::{make_grid, RadialFn, RadialGrid};

/// The default radial grid with `m` nodes.
pub fn grid(m: usize) -> Arc<RadialGrid> {
    make_grid(5, m, 40.0, 1.02).expect("default grid parameters are valid")
}

/// Unit scalar extremal on `grid`.
pub fn bubble(grid: &Arc<RadialGrid>) -> RadialFn {
    bubble_profile(grid, bubble_constant(5).expect("C_N on the default grid"), 1.0)
}

pub fn reference_coupling() -> CouplingConstants {
    coupling_constants(1.0, 2.0, 3.0, 5).expect("(1, 2, 3) is admissible")
}

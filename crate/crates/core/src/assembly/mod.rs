//! Identified degrees of freedom and assembly of 𝕄, 𝕂, 𝔻.

pub mod assemble;
pub mod bound;
pub mod dof;
pub mod quadrature;
pub mod sparse;

use thiserror::Error;

pub use assemble::{assemble, Operators};
pub use bound::{estimate_spectral_bound, SpectralBound};
pub use dof::{build_dof_map, DofMap};
pub use quadrature::{quadrature_rule, QuadratureRule};
pub use sparse::SparseSymMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("quadrature degree {0} is not supported (use 2 or 4)")]
    UnsupportedDegree(usize),
    #[error("equivalence class of node {representative} has {size} members (expected 1 inside, 2..4 on the boundary)")]
    ClassSizeError { representative: usize, size: usize },
    #[error("quadrature point of tet {tet} at radius {radius} is outside the unit ball")]
    WeightSingularity { tet: usize, radius: f64 },
    #[error("tet {0} is degenerate")]
    DegenerateElement(usize),
    #[error("power iteration did not converge in {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },
    #[error("mass solve failed: {0}")]
    Solver(String),
}

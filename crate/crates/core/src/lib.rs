//! Constrained equilibria of small molecular arrays.
//!
//! Three particles at fixed triangle area and four particles at fixed
//! tetrahedron volume, described purely by inter-particle distances. The
//! crate provides the KKT systems, their symmetric ("trivial") solution
//! branches and stability thresholds, the permutation symmetries with their
//! isotropy reductions, and a pseudo-arclength continuation engine that
//! detects, localizes and switches onto bifurcating branches.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod continuation;
pub mod diagram;
mod error;
pub mod linalg;
mod math;
pub mod potentials;
mod scan;
pub mod symmetry;
pub mod system;
pub mod tetrahedron;
pub mod triangle;

pub use error::{Error, Result};
pub use potentials::{Derivative, PotentialSpec, Threshold};
pub use scan::StabilityBoundary;
pub use system::{Classification, KktSystem, Shape, Stability};
pub use tetrahedron::{TetState, TetraSystem};
pub use triangle::{TriState, TriangleSystem};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Which molecular array is being studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum Problem {
    /// Three particles, area constraint.
    Triangle,
    /// Four particles, volume constraint.
    Tetrahedron,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::Triangle => "triangle",
            Problem::Tetrahedron => "tetrahedron",
        }
    }

    /// Name of the continuation parameter.
    pub fn parameter_name(&self) -> &'static str {
        match self {
            Problem::Triangle => "area",
            Problem::Tetrahedron => "volume",
        }
    }

    /// Edge labels in state order (after the multiplier).
    pub fn edge_names(&self) -> &'static [&'static str] {
        match self {
            Problem::Triangle => &["a", "b", "c"],
            Problem::Tetrahedron => &["a", "b", "c", "A", "B", "C"],
        }
    }
}

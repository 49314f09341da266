//! Pseudo-arclength continuation with bifurcation detection, localization and
//! branch switching.
//!
//! All routines work on a [`ReducedSystem`](crate::symmetry::ReducedSystem):
//! the unknowns are the coordinates of a fixed-point subspace, while points,
//! tangents and kernel vectors are reported in full coordinates. Stability
//! changes are monitored through the inertia of the full Jacobian, which also
//! catches the double and triple eigenvalue crossings on the symmetric branch
//! where the determinant keeps its sign.

mod newton;
mod switch;
mod trace;

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::symmetry::Perm;
use crate::system::{shape_of, Shape, Stability};

pub use newton::{newton_correct, Corrected, ParameterMode};
pub use switch::{branch_switch, mirror_symmetry, SeedMethod, SwitchOutcome};
pub use trace::{detect_and_localize, make_point, trace_branch, StopReason, TraceOutput, TraceRequest};

/// Step-size control and corrector parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct ContinuationSettings {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Residual infinity-norm accepted by the corrector.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub growth: f64,
    pub shrink: f64,
    /// Corrector iteration count above which the next step is shortened.
    pub contraction_target: usize,
    pub detection: bool,
    pub max_points: usize,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            h0: 1e-2,
            h_min: 1e-6,
            h_max: 0.5,
            newton_tol: 1e-10,
            newton_max_iters: 20,
            growth: 1.5,
            shrink: 0.5,
            contraction_target: 4,
            detection: true,
            max_points: 5000,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h_min > 0.0
            && self.h_min <= self.h0
            && self.h0 <= self.h_max
            && self.h_max.is_finite()
            && self.newton_tol > 0.0
            && self.newton_max_iters > 0
            && self.growth >= 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_points >= 2;
        if ok {
            Ok(())
        } else {
            Err(usage(alloc::format!("invalid continuation settings {self:?}")))
        }
    }
}

/// A converged point of a branch, in full coordinates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BranchPoint {
    /// `(lambda, edges...)`.
    pub state: Vec<f64>,
    pub parameter: f64,
    pub arclength: f64,
    pub stability: Stability,
    pub shape: Shape,
    /// Sign of the determinant of the full Jacobian.
    pub det_sign: i8,
    /// Number of negative eigenvalues of the full Jacobian.
    pub negative_count: usize,
    pub energy: f64,
    /// Unit tangent `(dx, dp)` along the direction of travel.
    pub tangent: Vec<f64>,
}

impl BranchPoint {
    pub fn edges(&self) -> &[f64] {
        &self.state[1..]
    }

    /// `state` followed by `parameter`.
    pub fn extended(&self) -> Vec<f64> {
        let mut v = self.state.clone();
        v.push(self.parameter);
        v
    }

    fn permuted(&self, p: &Perm) -> BranchPoint {
        let state = p.apply(&self.state);
        let mut tangent = self.tangent.clone();
        if tangent.len() == state.len() + 1 {
            let n = state.len();
            let moved = p.apply(&tangent[..n]);
            tangent[..n].copy_from_slice(&moved);
        }
        BranchPoint {
            shape: shape_of(&state),
            state,
            tangent,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum BranchKind {
    Trivial,
    Primary,
    Secondary,
    /// Branches beyond the second switching level.
    Deep,
}

/// A traced solution curve; points are ordered by arclength.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Branch {
    pub id: usize,
    pub kind: BranchKind,
    /// Event this branch was switched from.
    pub parent_event: Option<usize>,
    /// Branch whose image under `generator` this is, for orbit copies.
    pub orbit_of: Option<usize>,
    /// Edge permutation mapping the orbit source onto this branch.
    pub generator: Option<Vec<usize>>,
    /// Order of the isotropy subgroup of the branch.
    pub isotropy_order: usize,
    pub points: Vec<BranchPoint>,
}

impl Branch {
    pub fn new(id: usize, kind: BranchKind, points: Vec<BranchPoint>) -> Self {
        Branch {
            id,
            kind,
            parent_event: None,
            orbit_of: None,
            generator: None,
            isotropy_order: 1,
            points,
        }
    }

    /// The image of the branch under `p`; arclength and stability are unchanged.
    pub fn permuted(&self, p: &Perm) -> Branch {
        Branch {
            points: self.points.iter().map(|q| q.permuted(p)).collect(),
            orbit_of: Some(self.orbit_of.unwrap_or(self.id)),
            generator: Some(p.edge_map()),
            ..self.clone()
        }
    }

    /// Range of the continuation parameter over the branch.
    pub fn parameter_range(&self) -> Option<(f64, f64)> {
        let mut it = self.points.iter().map(|p| p.parameter);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    /// Recomputes arclength as cumulative Euclidean distance in `(state, parameter)`.
    pub fn recompute_arclength(&mut self) {
        let mut s = 0.0;
        let mut prev: Option<Vec<f64>> = None;
        for p in &mut self.points {
            let cur = p.extended();
            if let Some(q) = &prev {
                s += crate::linalg::norm2(&crate::linalg::axpy(-1.0, q, &cur));
            }
            p.arclength = s;
            prev = Some(cur);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum EventKind {
    /// Bifurcation from the fully symmetric branch.
    Primary,
    /// Bifurcation from a nontrivial branch.
    Secondary,
    /// Fold: the parameter reverses direction.
    Turning,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Primary => "primary",
            EventKind::Secondary => "secondary",
            EventKind::Turning => "turning",
        }
    }
}

/// A localized singular point of the full Jacobian along a branch.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BifurcationEvent {
    pub id: usize,
    pub kind: EventKind,
    pub parameter: f64,
    pub kernel_dim: usize,
    /// Orthonormal eigenvectors of the full Jacobian for the vanishing eigenvalues.
    pub kernel_basis: Vec<Vec<f64>>,
    pub source_branch: usize,
    pub state: Vec<f64>,
    /// Branch tangent `(dx, dp)` at the event.
    pub tangent: Vec<f64>,
    /// Smallest absolute eigenvalue of the full Jacobian relative to its norm.
    pub residual_eigenvalue: f64,
    /// Set when localization did not reach its tolerance.
    pub reduced_precision: bool,
    /// Why switching was not attempted or failed, if so.
    pub note: Option<String>,
}

/// Lyapunov–Schmidt data used to seed a bifurcating branch.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BranchSwitchData {
    /// Unit kernel vector in full coordinates.
    pub v: Vec<f64>,
    /// Left kernel vector with `<v*, v> = 1`.
    pub v_star: Vec<f64>,
    pub a0: f64,
    pub b0: f64,
    pub m: f64,
    pub epsilon: f64,
}

//! The interface shared by the triangle and tetrahedron KKT systems.
//!
//! A state is `x = (lambda, edges...)` and the parameter `p` is the area
//! (triangle) or the volume (tetrahedron). The residual is
//! `F(x, p) = (g(edges) - c(p), grad E + lambda grad g)` and its Jacobian is
//! the symmetric bordered matrix `[[0, grad gᵗ], [grad g, hess E + lambda hess g]]`.

use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{orthogonal_complement, DenseMatrix};
use crate::potentials::PotentialSpec;
use crate::symmetry::GroupSpec;
use crate::Problem;

/// Stability of a constrained critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum Stability {
    Stable,
    Unstable,
    /// Some tangent-space eigenvalue is zero to within tolerance.
    Marginal,
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable)
    }
}

/// Symmetry pattern of the edge lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum Shape {
    Equilateral,
    /// Two edges equal; `a = b`.
    IsoscelesAb,
    /// `a = c`.
    IsoscelesAc,
    /// `b = c`.
    IsoscelesBc,
    Scalene,
    Regular,
    /// Four equal edges, the remaining opposite pair unequal: `(a,a,c,a,a,C)` and images.
    FourEqualOppositeDistinct,
    /// The three edges of a face equal and the three edges at the opposite
    /// vertex equal: `(a,a,a,A,A,A)` and images.
    FaceAndApex,
    /// One opposite pair equal, the other four equal: `(a,b,b,a,b,b)` and images.
    OppositePairEqual,
    Other,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::Equilateral => "equilateral",
            Shape::IsoscelesAb => "isosceles_ab",
            Shape::IsoscelesAc => "isosceles_ac",
            Shape::IsoscelesBc => "isosceles_bc",
            Shape::Scalene => "scalene",
            Shape::Regular => "regular",
            Shape::FourEqualOppositeDistinct => "four_equal_opposite_distinct",
            Shape::FaceAndApex => "face_and_apex",
            Shape::OppositePairEqual => "opposite_pair_equal",
            Shape::Other => "other",
        }
    }

    pub fn is_isosceles(&self) -> bool {
        matches!(self, Shape::IsoscelesAb | Shape::IsoscelesAc | Shape::IsoscelesBc)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative tolerance for deciding that two edges are equal.
pub const SHAPE_TOL: f64 = 1e-6;

pub(crate) fn edges_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= SHAPE_TOL * x.abs().max(y.abs())
}

/// Shape label of a state `(lambda, edges...)` with three or six edges.
pub fn shape_of(x: &[f64]) -> Shape {
    match x.len() {
        4 => crate::triangle::shape3(x[1], x[2], x[3]),
        7 => {
            let mut e = [0.0; 6];
            e.copy_from_slice(&x[1..]);
            crate::tetrahedron::shape4(&e)
        }
        _ => Shape::Other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub stability: Stability,
    pub shape: Shape,
    /// Eigenvalues of the Lagrangian Hessian restricted to the constraint tangent space, ascending.
    pub tangent_eigenvalues: Vec<f64>,
}

/// Relative tolerance below which a tangent-space eigenvalue counts as zero.
pub const STABILITY_TOL: f64 = 1e-8;

/// Restricts `hessian` to the orthogonal complement of `gradient` and
/// classifies the resulting quadratic form.
pub fn classify_restricted(hessian: &DenseMatrix, gradient: &[f64], shape: Shape) -> Result<Classification> {
    let basis = orthogonal_complement(gradient)?;
    let projected = hessian.congruence(&basis);
    let eig = projected.sym_eigen()?;
    let tol = STABILITY_TOL * projected.frobenius_norm();
    let stability = if eig.values.iter().any(|v| v.abs() <= tol) {
        Stability::Marginal
    } else if eig.values.iter().all(|&v| v > tol) {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Ok(Classification {
        stability,
        shape,
        tangent_eigenvalues: eig.values,
    })
}

/// A parameterized constrained critical-point problem with a permutation symmetry.
pub trait KktSystem: Sync {
    fn problem(&self) -> Problem;

    fn potential(&self) -> &PotentialSpec;

    /// Number of unknowns including the multiplier.
    fn dim(&self) -> usize;

    /// `F(x, p)`; errors on non-positive edges.
    fn residual(&self, x: &[f64], p: f64) -> Result<Vec<f64>>;

    /// `D_x F(x, p)`, which does not depend on `p`.
    fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix>;

    /// `D_p F(x, p)`.
    fn param_derivative(&self, p: f64) -> Vec<f64>;

    /// Whether the edges describe a nondegenerate configuration.
    fn feasible(&self, x: &[f64]) -> bool;

    /// Gradient of the constraint function with respect to the edges.
    fn constraint_gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `hess E + lambda hess g`.
    fn lagrangian_hessian(&self, x: &[f64]) -> DenseMatrix;

    /// Total pair energy.
    fn energy(&self, x: &[f64]) -> f64;

    /// The fully symmetric solution at parameter `p`.
    fn trivial(&self, p: f64) -> Result<Vec<f64>>;

    /// Symmetry group acting on `x` (the multiplier coordinate is fixed).
    fn group(&self) -> &GroupSpec;

    fn shape(&self, x: &[f64]) -> Shape;

    /// Stability on the constraint tangent space plus the shape label.
    fn classify(&self, x: &[f64]) -> Result<Classification> {
        classify_restricted(&self.lagrangian_hessian(x), &self.constraint_gradient(x), self.shape(x))
    }
}

//! Three particles at fixed triangle area.
//!
//! The squared area is `g(a,b,c) = (a²b² + a²c² + b²c²)/8 - (a⁴ + b⁴ + c⁴)/16`
//! and the KKT unknowns are `(lambda, a, b, c)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::potentials::PotentialSpec;
use crate::scan::{scan_roots, StabilityBoundary, TRANSVERSALITY_TOL};
use crate::symmetry::{triangle_group, GroupSpec};
use crate::system::{edges_equal, Classification, KktSystem, Shape};
use crate::Problem;

/// Unknowns of the three-particle KKT system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TriState {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriState {
    pub fn new(lambda: f64, a: f64, b: f64, c: f64) -> Self {
        TriState { lambda, a, b, c }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.lambda, self.a, self.b, self.c]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), 4, "triangle state has 4 components");
        TriState::new(x[0], x[1], x[2], x[3])
    }

    pub fn edges(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    fn check_edges(&self) -> Result<()> {
        if self.a > 0.0 && self.b > 0.0 && self.c > 0.0 {
            Ok(())
        } else {
            Err(domain(format!(
                "triangle edges must be positive, got ({}, {}, {})",
                self.a, self.b, self.c
            )))
        }
    }
}

/// Entries of the Jacobian on the symmetric branch and its spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialSpectrum3 {
    /// Diagonal of the Hessian block.
    pub alpha: f64,
    /// Off-diagonal of the Hessian block.
    pub beta: f64,
    /// Border entry.
    pub gamma: f64,
    /// `alpha - beta`, a double eigenvalue.
    pub mu: f64,
    /// The two simple eigenvalues, which never vanish.
    pub simple_pair: [f64; 2],
}

/// Squared area in expanded quartic form; nonpositive for non-triangles.
pub fn heron(a: f64, b: f64, c: f64) -> f64 {
    let (a2, b2, c2) = (a * a, b * b, c * c);
    (a2 * b2 + a2 * c2 + b2 * c2) / 8.0 - (a2 * a2 + b2 * b2 + c2 * c2) / 16.0
}

pub fn heron_gradient(a: f64, b: f64, c: f64) -> [f64; 3] {
    let (a2, b2, c2) = (a * a, b * b, c * c);
    [
        0.25 * a * (b2 + c2 - a2),
        0.25 * b * (a2 + c2 - b2),
        0.25 * c * (a2 + b2 - c2),
    ]
}

pub fn heron_hessian(a: f64, b: f64, c: f64) -> DenseMatrix {
    let (a2, b2, c2) = (a * a, b * b, c * c);
    DenseMatrix::from_rows(&[
        &[0.25 * (b2 + c2 - 3.0 * a2), 0.5 * a * b, 0.5 * a * c],
        &[0.5 * a * b, 0.25 * (a2 + c2 - 3.0 * b2), 0.5 * b * c],
        &[0.5 * a * c, 0.5 * b * c, 0.25 * (a2 + b2 - 3.0 * c2)],
    ])
}

/// `(g - A², phi'(a) + lambda g_a, phi'(b) + lambda g_b, phi'(c) + lambda g_c)`.
pub fn residual3(potential: &PotentialSpec, state: &TriState, area: f64) -> Result<[f64; 4]> {
    state.check_edges()?;
    let TriState { lambda, a, b, c } = *state;
    let grad = heron_gradient(a, b, c);
    let [_, da, _] = potential.derivatives(a);
    let [_, db, _] = potential.derivatives(b);
    let [_, dc, _] = potential.derivatives(c);
    Ok([
        heron(a, b, c) - area * area,
        da + lambda * grad[0],
        db + lambda * grad[1],
        dc + lambda * grad[2],
    ])
}

fn lagrangian_hessian3(potential: &PotentialSpec, state: &TriState) -> DenseMatrix {
    let TriState { lambda, a, b, c } = *state;
    let mut h = heron_hessian(a, b, c).scale(lambda);
    for (i, r) in [a, b, c].into_iter().enumerate() {
        h[(i, i)] += potential.derivatives(r)[2];
    }
    h
}

/// Bordered KKT Jacobian `[[0, grad gᵗ], [grad g, hess E + lambda hess g]]`.
pub fn jacobian3(potential: &PotentialSpec, state: &TriState) -> Result<DenseMatrix> {
    state.check_edges()?;
    let grad = heron_gradient(state.a, state.b, state.c);
    let h = lagrangian_hessian3(potential, state);
    Ok(DenseMatrix::from_fn(4, 4, |i, j| match (i, j) {
        (0, 0) => 0.0,
        (0, j) => grad[j - 1],
        (i, 0) => grad[i - 1],
        (i, j) => h[(i - 1, j - 1)],
    }))
}

/// Side of the equilateral triangle with area `A`: `2 sqrt(A) / 3^(1/4)`.
pub fn equilateral_side(area: f64) -> f64 {
    2.0 * math::sqrt(area) / math::sqrt(math::sqrt(3.0))
}

/// The equilateral solution `(lambda_A, a_A, a_A, a_A)` with `lambda_A = -4 phi'(a_A) / a_A³`.
pub fn trivial3(potential: &PotentialSpec, area: f64) -> Result<TriState> {
    if !(area > 0.0) {
        return Err(domain(format!("area must be positive, got {area}")));
    }
    let a = equilateral_side(area);
    let d1 = potential.derivatives(a)[1];
    Ok(TriState::new(-4.0 * d1 / (a * a * a), a, a, a))
}

pub fn trivial_spectrum3(potential: &PotentialSpec, area: f64) -> Result<TrivialSpectrum3> {
    let s = trivial3(potential, area)?;
    let a = s.a;
    let d2 = potential.derivatives(a)[2];
    let alpha = d2 - s.lambda * a * a / 4.0;
    let beta = s.lambda * a * a / 2.0;
    let gamma = a * a * a / 4.0;
    let t = alpha + 2.0 * beta;
    let disc = math::sqrt(t * t + 12.0 * gamma * gamma);
    Ok(TrivialSpectrum3 {
        alpha,
        beta,
        gamma,
        mu: alpha - beta,
        simple_pair: [0.5 * (t - disc), 0.5 * (t + disc)],
    })
}

/// Double eigenvalue on the symmetric branch: `phi''(a_A) + 3 phi'(a_A) / a_A`.
pub fn mu3(potential: &PotentialSpec, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(domain(format!("area must be positive, got {area}")));
    }
    Ok(potential.margin_unchecked(equilateral_side(area), 3.0))
}

/// Zeros of `mu` on `[lo, hi]`, the candidate primary bifurcation points.
pub fn stability_boundaries3(
    potential: &PotentialSpec,
    lo: f64,
    hi: f64,
    grid_n: usize,
) -> Result<Vec<StabilityBoundary>> {
    let roots = scan_roots(|area| potential.margin_unchecked(equilateral_side(area), 3.0), lo, hi, grid_n)?;
    Ok(roots
        .into_iter()
        .map(|(parameter, slope)| StabilityBoundary {
            eigenvalue: "mu".into(),
            parameter,
            slope,
            transversal: slope.abs() >= TRANSVERSALITY_TOL,
            kernel_dim: 2,
        })
        .collect())
}

pub fn shape3(a: f64, b: f64, c: f64) -> Shape {
    match (edges_equal(a, b), edges_equal(a, c), edges_equal(b, c)) {
        (true, true, _) | (true, _, true) | (_, true, true) => Shape::Equilateral,
        (true, false, false) => Shape::IsoscelesAb,
        (false, true, false) => Shape::IsoscelesAc,
        (false, false, true) => Shape::IsoscelesBc,
        (false, false, false) => Shape::Scalene,
    }
}

/// Stability on the tangent space of the area constraint and the shape label.
pub fn classify_point3(potential: &PotentialSpec, state: &TriState) -> Result<Classification> {
    state.check_edges()?;
    TriangleSystem::new(*potential).classify(&state.to_vec())
}

/// The three-particle problem as a [`KktSystem`] with parameter `A`.
#[derive(Debug, Clone)]
pub struct TriangleSystem {
    potential: PotentialSpec,
    group: GroupSpec,
}

impl TriangleSystem {
    pub fn new(potential: PotentialSpec) -> Self {
        TriangleSystem {
            potential,
            group: triangle_group(),
        }
    }
}

impl KktSystem for TriangleSystem {
    fn problem(&self) -> Problem {
        Problem::Triangle
    }

    fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    fn dim(&self) -> usize {
        4
    }

    fn residual(&self, x: &[f64], p: f64) -> Result<Vec<f64>> {
        Ok(residual3(&self.potential, &TriState::from_slice(x), p)?.to_vec())
    }

    fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        jacobian3(&self.potential, &TriState::from_slice(x))
    }

    fn param_derivative(&self, p: f64) -> Vec<f64> {
        vec![-2.0 * p, 0.0, 0.0, 0.0]
    }

    fn feasible(&self, x: &[f64]) -> bool {
        x[1] > 0.0 && x[2] > 0.0 && x[3] > 0.0 && heron(x[1], x[2], x[3]) > 0.0
    }

    fn constraint_gradient(&self, x: &[f64]) -> Vec<f64> {
        heron_gradient(x[1], x[2], x[3]).to_vec()
    }

    fn lagrangian_hessian(&self, x: &[f64]) -> DenseMatrix {
        lagrangian_hessian3(&self.potential, &TriState::from_slice(x))
    }

    fn energy(&self, x: &[f64]) -> f64 {
        x[1..].iter().map(|&r| self.potential.derivatives(r)[0]).sum()
    }

    fn trivial(&self, p: f64) -> Result<Vec<f64>> {
        Ok(trivial3(&self.potential, p)?.to_vec())
    }

    fn group(&self) -> &GroupSpec {
        &self.group
    }

    fn shape(&self, x: &[f64]) -> Shape {
        shape3(x[1], x[2], x[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Stability;

    fn lj() -> PotentialSpec {
        PotentialSpec::lennard_jones(1.0, 2.0, 12.0, 6.0).unwrap()
    }

    fn hooke() -> PotentialSpec {
        PotentialSpec::spring(1.0, 0.0).unwrap()
    }

    const UNIT_AREA: f64 = 0.433_012_701_892_219_3; // sqrt(3)/4

    #[test]
    fn heron_examples() {
        assert_eq!(heron(3.0, 4.0, 5.0), 36.0);
        assert_eq!(heron(1.0, 1.0, 1.0), 3.0 / 16.0);
        assert_eq!(heron(1.0, 1.0, 2.0), 0.0);
    }

    #[test]
    fn heron_matches_factored_form() {
        let factored = |a: f64, b: f64, c: f64| {
            let s = 0.5 * (a + b + c);
            s * (s - a) * (s - b) * (s - c)
        };
        for &(a, b, c) in &[(0.7, 1.1, 1.5), (2.0, 2.5, 1.2), (1.0, 1.0, 1.9)] {
            let g = heron(a, b, c);
            assert!((g - factored(a, b, c)).abs() < 1e-14 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn trivial_state_examples() {
        for p in [lj(), hooke()] {
            let s = trivial3(&p, UNIT_AREA).unwrap();
            assert!((s.a - 1.0).abs() < 1e-15);
            let r = residual3(&p, &s, UNIT_AREA).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
        }
        assert!(trivial3(&lj(), UNIT_AREA).unwrap().lambda.abs() < 1e-13);
        assert!((trivial3(&hooke(), UNIT_AREA).unwrap().lambda + 4.0).abs() < 1e-13);
        assert!(trivial3(&lj(), 0.0).is_err());
    }

    #[test]
    fn residual_by_hand() {
        let area = libm::sqrt(3.0 / 16.0);
        let s = TriState::new(-4.0, 1.0, 1.0, 1.0);
        let r = residual3(&hooke(), &s, area).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-15), "{r:?}");

        let s = TriState::new(0.0, 1.0, 1.0, 1.0);
        let r = residual3(&lj(), &s, 1.0).unwrap();
        assert_eq!(r, [3.0 / 16.0 - 1.0, 0.0, 0.0, 0.0]);
        assert!(residual3(&lj(), &TriState::new(0.0, -1.0, 1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn jacobian_structure() {
        let j = jacobian3(&lj(), &TriState::new(0.3, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(j.row(0)[1..], [0.25, 0.25, 0.25]);
        let s = trivial3(&hooke(), 2.0).unwrap();
        let j = jacobian3(&hooke(), &s).unwrap();
        assert!((j[(1, 1)] - 2.0).abs() < 1e-12);
        assert!((j[(1, 2)] + 2.0).abs() < 1e-12);
        assert!(j.symmetry_defect() <= 1e-14);
    }

    #[test]
    fn mu_examples() {
        for area in [0.1, 1.0, 37.0] {
            assert!((mu3(&hooke(), area).unwrap() - 4.0).abs() < 1e-12);
        }
        let spec = trivial_spectrum3(&lj(), 0.7).unwrap();
        assert!((spec.mu - mu3(&lj(), 0.7).unwrap()).abs() < 1e-12);
        assert!(spec.simple_pair[0] < 0.0 && spec.simple_pair[1] > 0.0);
    }

    #[test]
    fn classify_trivial_examples() {
        let c = classify_point3(&lj(), &trivial3(&lj(), 0.5).unwrap()).unwrap();
        assert_eq!((c.stability, c.shape), (Stability::Stable, Shape::Equilateral));
        let c = classify_point3(&lj(), &trivial3(&lj(), 0.7).unwrap()).unwrap();
        assert_eq!((c.stability, c.shape), (Stability::Unstable, Shape::Equilateral));
        let c = classify_point3(&hooke(), &trivial3(&hooke(), 100.0).unwrap()).unwrap();
        assert_eq!(c.stability, Stability::Stable);
    }

    #[test]
    fn shapes() {
        assert_eq!(shape3(1.0, 1.0, 1.0), Shape::Equilateral);
        assert_eq!(shape3(1.0, 1.0, 1.3), Shape::IsoscelesAb);
        assert_eq!(shape3(1.0, 1.3, 1.0), Shape::IsoscelesAc);
        assert_eq!(shape3(1.3, 1.0, 1.0), Shape::IsoscelesBc);
        assert_eq!(shape3(1.3, 1.0, 1.1), Shape::Scalene);
        assert_eq!(shape3(1.0, 1.0 + 1e-9, 1.3), Shape::IsoscelesAb);
    }
}

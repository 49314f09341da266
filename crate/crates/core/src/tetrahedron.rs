//! Four particles at fixed tetrahedron volume.
//!
//! Edges are ordered `(a, b, c, A, B, C)`: `a, b, c` meet at a vertex and
//! `A, B, C` are the edges opposite to them. With vertices `0..4`, vertex 0
//! is the apex, `a = |01|`, `b = |02|`, `c = |03|`, `A = |23|`, `B = |13|`,
//! `C = |12|`. The constraint is `g(edges) = 288 V²` with `g` the
//! Cayley–Menger determinant.

use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::potentials::PotentialSpec;
use crate::scan::{check_interval, scan_roots, StabilityBoundary, TRANSVERSALITY_TOL};
use crate::symmetry::{tetra_group, GroupSpec};
use crate::system::{edges_equal, Classification, KktSystem, Shape};
use crate::Problem;

/// Vertex pairs of the six edges in state order.
pub const EDGE_VERTICES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (1, 3), (1, 2)];

/// Index pairs of opposite edges.
pub const OPPOSITE_PAIRS: [(usize, usize); 3] = [(0, 3), (1, 4), (2, 5)];

/// Edge index sets of the four faces.
const FACES: [[usize; 3]; 4] = [[0, 1, 5], [0, 2, 4], [1, 2, 3], [3, 4, 5]];

/// Unknowns of the four-particle KKT system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TetState {
    pub lambda: f64,
    /// `(a, b, c, A, B, C)`.
    pub edges: [f64; 6],
}

impl TetState {
    pub fn new(lambda: f64, edges: [f64; 6]) -> Self {
        TetState { lambda, edges }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(7);
        v.push(self.lambda);
        v.extend_from_slice(&self.edges);
        v
    }

    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), 7, "tetrahedron state has 7 components");
        let mut edges = [0.0; 6];
        edges.copy_from_slice(&x[1..]);
        TetState::new(x[0], edges)
    }
}

fn check_edges(edges: &[f64; 6]) -> Result<()> {
    if edges.iter().all(|&e| e > 0.0) {
        Ok(())
    } else {
        Err(domain(format!("tetrahedron edges must be positive, got {edges:?}")))
    }
}

/// Cayley–Menger determinant; `288 V²` for a tetrahedron of volume `V`.
pub fn cayley_menger(edges: &[f64; 6]) -> f64 {
    let [a, b, c, aa, bb, cc] = edges.map(|e| e * e);
    DenseMatrix::from_rows(&[
        &[0.0, a, b, c, 1.0],
        &[a, 0.0, cc, bb, 1.0],
        &[b, cc, 0.0, aa, 1.0],
        &[c, bb, aa, 0.0, 1.0],
        &[1.0, 1.0, 1.0, 1.0, 0.0],
    ])
    .determinant()
}

/// Whether the six lengths are the edges of a nondegenerate tetrahedron.
pub fn is_tetrahedron(edges: &[f64; 6]) -> Result<bool> {
    check_edges(edges)?;
    let [_, _, _, aa, bb, cc] = *edges;
    Ok(cayley_menger(edges) > 0.0 && aa < bb + cc && bb < aa + cc && cc < aa + bb)
}

/// Derivatives of `g` with respect to the squared edges, `dg/d(e²)`.
fn half_gradient(edges: &[f64; 6]) -> [f64; 6] {
    let [p, q, r, pp, qq, rr] = edges.map(|e| e * e);
    [
        2.0 * (pp * (q + r + qq + rr - 2.0 * p - pp) + (q - r) * (qq - rr)),
        2.0 * (qq * (p + r + pp + rr - 2.0 * q - qq) + (p - r) * (pp - rr)),
        2.0 * (rr * (p + q + pp + qq - 2.0 * r - rr) + (p - q) * (pp - qq)),
        2.0 * (p * (q + r + qq + rr - 2.0 * pp - p) - (q - rr) * (r - qq)),
        2.0 * (q * (p + r + pp + rr - 2.0 * qq - q) - (p - rr) * (r - pp)),
        2.0 * (r * (p + q + pp + qq - 2.0 * rr - r) - (p - qq) * (q - pp)),
    ]
}

/// Gradient of the Cayley–Menger determinant with respect to `(a, b, c, A, B, C)`.
pub fn grad_g4(edges: &[f64; 6]) -> [f64; 6] {
    let h = half_gradient(edges);
    core::array::from_fn(|i| 2.0 * edges[i] * h[i])
}

/// Hessian of the Cayley–Menger determinant, differentiated by hand from [`grad_g4`].
pub fn hess_g4(edges: &[f64; 6]) -> DenseMatrix {
    let [p, q, r, pp, qq, rr] = edges.map(|e| e * e);
    // Second derivatives of g with respect to the squared edges.
    let d: [[f64; 6]; 6] = [
        [
            -4.0 * pp,
            2.0 * (pp + qq - rr),
            2.0 * (pp - qq + rr),
            2.0 * (q + r + qq + rr - 2.0 * p - 2.0 * pp),
            2.0 * (pp + q - r),
            2.0 * (pp - q + r),
        ],
        [
            2.0 * (qq + pp - rr),
            -4.0 * qq,
            2.0 * (qq - pp + rr),
            2.0 * (qq + p - r),
            2.0 * (p + r + pp + rr - 2.0 * q - 2.0 * qq),
            2.0 * (qq - p + r),
        ],
        [
            2.0 * (rr + pp - qq),
            2.0 * (rr - pp + qq),
            -4.0 * rr,
            2.0 * (rr + p - q),
            2.0 * (rr - p + q),
            2.0 * (p + q + pp + qq - 2.0 * r - 2.0 * rr),
        ],
        [
            2.0 * (q + r + qq + rr - 2.0 * pp - 2.0 * p),
            2.0 * (p - r + qq),
            2.0 * (p - q + rr),
            -4.0 * p,
            2.0 * (p + q - rr),
            2.0 * (p + r - qq),
        ],
        [
            2.0 * (q - r + pp),
            2.0 * (p + r + pp + rr - 2.0 * qq - 2.0 * q),
            2.0 * (q - p + rr),
            2.0 * (q + p - rr),
            -4.0 * q,
            2.0 * (q + r - pp),
        ],
        [
            2.0 * (r - q + pp),
            2.0 * (r - p + qq),
            2.0 * (p + q + pp + qq - 2.0 * rr - 2.0 * r),
            2.0 * (r + p - qq),
            2.0 * (r + q - pp),
            -4.0 * r,
        ],
    ];
    let h = half_gradient(edges);
    DenseMatrix::from_fn(6, 6, |i, j| {
        let diag = if i == j { 2.0 * h[i] } else { 0.0 };
        diag + 4.0 * edges[i] * edges[j] * d[i][j]
    })
}

/// `(g - 288 V², grad E + lambda grad g)`.
pub fn residual4(potential: &PotentialSpec, state: &TetState, volume: f64) -> Result<[f64; 7]> {
    check_edges(&state.edges)?;
    let grad = grad_g4(&state.edges);
    let mut out = [0.0; 7];
    out[0] = cayley_menger(&state.edges) - 288.0 * volume * volume;
    for i in 0..6 {
        out[i + 1] = potential.derivatives(state.edges[i])[1] + state.lambda * grad[i];
    }
    Ok(out)
}

fn lagrangian_hessian4(potential: &PotentialSpec, state: &TetState) -> DenseMatrix {
    let mut h = hess_g4(&state.edges).scale(state.lambda);
    for i in 0..6 {
        h[(i, i)] += potential.derivatives(state.edges[i])[2];
    }
    h
}

/// Bordered KKT Jacobian, 7×7 and symmetric.
pub fn jacobian4(potential: &PotentialSpec, state: &TetState) -> Result<DenseMatrix> {
    check_edges(&state.edges)?;
    let grad = grad_g4(&state.edges);
    let h = lagrangian_hessian4(potential, state);
    Ok(DenseMatrix::from_fn(7, 7, |i, j| match (i, j) {
        (0, 0) => 0.0,
        (0, j) => grad[j - 1],
        (i, 0) => grad[i - 1],
        (i, j) => h[(i - 1, j - 1)],
    }))
}

/// Edge of the regular tetrahedron of volume `V`: `a³ = 6 sqrt(2) V`.
pub fn regular_edge(volume: f64) -> f64 {
    math::cbrt(6.0 * core::f64::consts::SQRT_2 * volume)
}

/// The regular solution with `lambda_V = -phi'(a_V) / (4 a_V⁵)`.
pub fn trivial4(potential: &PotentialSpec, volume: f64) -> Result<TetState> {
    if !(volume > 0.0) {
        return Err(domain(format!("volume must be positive, got {volume}")));
    }
    let a = regular_edge(volume);
    let d1 = potential.derivatives(a)[1];
    let a2 = a * a;
    Ok(TetState::new(-d1 / (4.0 * a2 * a2 * a), [a; 6]))
}

/// Closed-form spectral data on the regular branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialSpectrum4 {
    /// Diagonal of the Lagrangian Hessian, `phi'' + 3 phi' / a`.
    pub alpha: f64,
    /// Off-diagonal entry for adjacent edges, `-2 phi' / a`.
    pub beta: f64,
    /// Triple Jacobian eigenvalue, equal to `alpha`.
    pub mu1: f64,
    /// Double Jacobian eigenvalue, `alpha - 2 beta`.
    pub mu2: f64,
    /// Eigenvalues of `Mᵗ H M` for the edge-elimination basis `M` of
    /// `{y : sum y = 0}` (see [`sum_zero_basis`]), ascending.
    pub u_eigs: [f64; 5],
}

pub fn trivial_spectrum4(potential: &PotentialSpec, volume: f64) -> Result<TrivialSpectrum4> {
    if !(volume > 0.0) {
        return Err(domain(format!("volume must be positive, got {volume}")));
    }
    let a = regular_edge(volume);
    let [_, d1, d2] = potential.derivatives(a);
    let alpha = d2 + 3.0 * d1 / a;
    let beta = -2.0 * d1 / a;
    let gap = alpha - 2.0 * beta;
    let disc = math::sqrt(16.0 * alpha * alpha + 9.0 * gap * gap);
    let mut u_eigs = [
        alpha,
        alpha,
        gap,
        0.5 * (7.0 * alpha - 6.0 * beta - disc),
        0.5 * (7.0 * alpha - 6.0 * beta + disc),
    ];
    u_eigs.sort_by(f64::total_cmp);
    Ok(TrivialSpectrum4 {
        alpha,
        beta,
        mu1: alpha,
        mu2: gap,
        u_eigs,
    })
}

/// The 6×5 basis of `{y : y1 + ... + y6 = 0}` obtained by eliminating the
/// fourth coordinate. It is not orthonormal.
pub fn sum_zero_basis() -> DenseMatrix {
    DenseMatrix::from_fn(6, 5, |i, j| match i {
        3 => -1.0,
        i if i < 3 => f64::from(u8::from(i == j)),
        i => f64::from(u8::from(i - 1 == j)),
    })
}

/// `(mu1, mu2) = (phi'' + 3 phi'/a_V, phi'' + 7 phi'/a_V)` on the regular branch.
pub fn mu_tetra(potential: &PotentialSpec, volume: f64) -> Result<(f64, f64)> {
    if !(volume > 0.0) {
        return Err(domain(format!("volume must be positive, got {volume}")));
    }
    let a = regular_edge(volume);
    Ok((potential.margin_unchecked(a, 3.0), potential.margin_unchecked(a, 7.0)))
}

/// Zeros of `mu1` (kernel dimension 3) and `mu2` (kernel dimension 2), sorted by volume.
pub fn stability_boundaries4(
    potential: &PotentialSpec,
    lo: f64,
    hi: f64,
    grid_n: usize,
) -> Result<Vec<StabilityBoundary>> {
    check_interval(lo, hi, grid_n)?;
    let mut out = Vec::new();
    for (name, coef, kernel_dim) in [("mu1", 3.0, 3), ("mu2", 7.0, 2)] {
        let roots = scan_roots(|v| potential.margin_unchecked(regular_edge(v), coef), lo, hi, grid_n)?;
        out.extend(roots.into_iter().map(|(parameter, slope)| StabilityBoundary {
            eigenvalue: name.into(),
            parameter,
            slope,
            transversal: slope.abs() >= TRANSVERSALITY_TOL,
            kernel_dim,
        }));
    }
    out.sort_by(|x, y| x.parameter.total_cmp(&y.parameter));
    Ok(out)
}

/// Symmetry pattern of the six edges up to relabeling of the vertices.
pub fn shape4(edges: &[f64; 6]) -> Shape {
    let mut class = [usize::MAX; 6];
    let mut sizes: Vec<usize> = Vec::new();
    for i in 0..6 {
        if class[i] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        class[i] = id;
        let mut n = 1;
        for j in i + 1..6 {
            if class[j] == usize::MAX && edges_equal(edges[i], edges[j]) {
                class[j] = id;
                n += 1;
            }
        }
        sizes.push(n);
    }
    let members = |id: usize| (0..6).filter(move |&i| class[i] == id);
    let is_opposite_pair = |id: usize| {
        let m: Vec<usize> = members(id).collect();
        m.len() == 2 && OPPOSITE_PAIRS.contains(&(m[0], m[1]))
    };
    match sizes.len() {
        1 => Shape::Regular,
        2 => {
            let small = if sizes[0] <= sizes[1] { 0 } else { 1 };
            match sizes[small] {
                2 if is_opposite_pair(small) => Shape::OppositePairEqual,
                3 => {
                    let is_face = |id: usize| {
                        let m: Vec<usize> = members(id).collect();
                        FACES.iter().any(|f| f[..] == m[..])
                    };
                    if is_face(0) || is_face(1) {
                        Shape::FaceAndApex
                    } else {
                        Shape::Other
                    }
                }
                _ => Shape::Other,
            }
        }
        3 => {
            let singles: Vec<usize> = (0..3).filter(|&id| sizes[id] == 1).collect();
            if singles.len() == 2 && sizes.contains(&4) {
                let i = members(singles[0]).next().unwrap_or(0);
                let j = members(singles[1]).next().unwrap_or(0);
                let pair = (i.min(j), i.max(j));
                if OPPOSITE_PAIRS.contains(&pair) {
                    return Shape::FourEqualOppositeDistinct;
                }
            }
            Shape::Other
        }
        _ => Shape::Other,
    }
}

/// Stability on the tangent space of the volume constraint and the shape label.
pub fn classify_point4(potential: &PotentialSpec, state: &TetState) -> Result<Classification> {
    check_edges(&state.edges)?;
    TetraSystem::new(*potential).classify(&state.to_vec())
}

/// The four-particle problem as a [`KktSystem`] with parameter `V`.
#[derive(Debug, Clone)]
pub struct TetraSystem {
    potential: PotentialSpec,
    group: GroupSpec,
}

impl TetraSystem {
    pub fn new(potential: PotentialSpec) -> Self {
        TetraSystem {
            potential,
            group: tetra_group(),
        }
    }
}

fn edge_array(x: &[f64]) -> [f64; 6] {
    let mut e = [0.0; 6];
    e.copy_from_slice(&x[1..7]);
    e
}

impl KktSystem for TetraSystem {
    fn problem(&self) -> Problem {
        Problem::Tetrahedron
    }

    fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    fn dim(&self) -> usize {
        7
    }

    fn residual(&self, x: &[f64], p: f64) -> Result<Vec<f64>> {
        Ok(residual4(&self.potential, &TetState::from_slice(x), p)?.to_vec())
    }

    fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        jacobian4(&self.potential, &TetState::from_slice(x))
    }

    fn param_derivative(&self, p: f64) -> Vec<f64> {
        let mut d = alloc::vec![0.0; 7];
        d[0] = -576.0 * p;
        d
    }

    fn feasible(&self, x: &[f64]) -> bool {
        is_tetrahedron(&edge_array(x)).unwrap_or(false)
    }

    fn constraint_gradient(&self, x: &[f64]) -> Vec<f64> {
        grad_g4(&edge_array(x)).to_vec()
    }

    fn lagrangian_hessian(&self, x: &[f64]) -> DenseMatrix {
        lagrangian_hessian4(&self.potential, &TetState::from_slice(x))
    }

    fn energy(&self, x: &[f64]) -> f64 {
        x[1..].iter().map(|&r| self.potential.derivatives(r)[0]).sum()
    }

    fn trivial(&self, p: f64) -> Result<Vec<f64>> {
        Ok(trivial4(&self.potential, p)?.to_vec())
    }

    fn group(&self) -> &GroupSpec {
        &self.group
    }

    fn shape(&self, x: &[f64]) -> Shape {
        shape4(&edge_array(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Stability;

    const UNIT_VOLUME: f64 = 0.117_851_130_197_757_92; // 1 / (6 sqrt 2)

    fn lj() -> PotentialSpec {
        PotentialSpec::lennard_jones(1.0, 2.0, 12.0, 6.0).unwrap()
    }

    fn hooke() -> PotentialSpec {
        PotentialSpec::spring(1.0, 0.0).unwrap()
    }

    #[test]
    fn cayley_menger_regular() {
        assert!((cayley_menger(&[1.0; 6]) - 4.0).abs() < 1e-14);
        assert!((cayley_menger(&[2.0; 6]) - 256.0).abs() < 1e-11);
        assert!(cayley_menger(&[1.0, 1.0, 1.0, 1.0, 1.0, 2.0]) < 0.0);
    }

    #[test]
    fn realizability() {
        assert!(is_tetrahedron(&[1.0; 6]).unwrap());
        assert!(!is_tetrahedron(&[1.0, 1.0, 1.0, 1.0, 1.0, 2.0]).unwrap());
        assert!(!is_tetrahedron(&[1.0, 1.0, 1.0, 0.3, 1.4, 1.0]).unwrap());
        assert!(is_tetrahedron(&[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn regular_gradient() {
        for a in [1.0, 1.7] {
            let g = grad_g4(&[a; 6]);
            let expect = 4.0 * libm::pow(a, 5.0);
            assert!(g.iter().all(|x| (x - expect).abs() < 1e-12 * expect), "{g:?}");
        }
    }

    #[test]
    fn hessian_is_symmetric() {
        let h = hess_g4(&[1.0, 1.1, 0.9, 1.2, 0.95, 1.05]);
        assert!(h.symmetry_defect() < 1e-13);
    }

    #[test]
    fn trivial_examples() {
        for p in [lj(), hooke()] {
            let s = trivial4(&p, UNIT_VOLUME).unwrap();
            assert!(s.edges.iter().all(|e| (e - 1.0).abs() < 1e-15));
            let r = residual4(&p, &s, UNIT_VOLUME).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-11), "{r:?}");
        }
        assert!(trivial4(&lj(), UNIT_VOLUME).unwrap().lambda.abs() < 1e-13);
        assert!((trivial4(&hooke(), UNIT_VOLUME).unwrap().lambda + 0.25).abs() < 1e-13);
        assert!(trivial4(&lj(), -1.0).is_err());
    }

    #[test]
    fn spring_mu_pair() {
        for v in [0.2, 3.0, 40.0] {
            let (m1, m2) = mu_tetra(&hooke(), v).unwrap();
            assert!((m1 - 4.0).abs() < 1e-12 && (m2 - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn u_matrix_matches_closed_form() {
        for (p, v) in [(lj(), 0.15), (hooke(), 2.0), (lj(), 0.3)] {
            let s = trivial4(&p, v).unwrap();
            let h = lagrangian_hessian4(&p, &s);
            let u = h.congruence(&sum_zero_basis());
            let eig = u.sym_eigen().unwrap();
            let closed = trivial_spectrum4(&p, v).unwrap();
            let scale = closed.u_eigs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for (x, y) in eig.values.iter().zip(closed.u_eigs) {
                assert!((x - y).abs() < 1e-9 * scale, "{:?} vs {:?}", eig.values, closed.u_eigs);
            }
            let prod = closed.u_eigs.iter().product::<f64>();
            let expect = closed.alpha * closed.alpha * closed.mu2 * 6.0 * closed.alpha * closed.mu2;
            assert!((prod - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn classify_examples() {
        let c = classify_point4(&lj(), &trivial4(&lj(), 0.15).unwrap()).unwrap();
        assert_eq!((c.stability, c.shape), (Stability::Stable, Shape::Regular));
        let c = classify_point4(&lj(), &trivial4(&lj(), 0.25).unwrap()).unwrap();
        assert_eq!((c.stability, c.shape), (Stability::Unstable, Shape::Regular));
        let c = classify_point4(&hooke(), &trivial4(&hooke(), 50.0).unwrap()).unwrap();
        assert_eq!(c.stability, Stability::Stable);
    }

    #[test]
    fn shape_families() {
        assert_eq!(shape4(&[1.0; 6]), Shape::Regular);
        assert_eq!(shape4(&[1.0, 1.0, 1.2, 1.0, 1.0, 0.8]), Shape::FourEqualOppositeDistinct);
        assert_eq!(shape4(&[1.0, 1.2, 1.0, 1.0, 0.8, 1.0]), Shape::FourEqualOppositeDistinct);
        assert_eq!(shape4(&[1.0, 1.0, 1.0, 1.3, 1.3, 1.3]), Shape::FaceAndApex);
        assert_eq!(shape4(&[1.3, 1.3, 1.0, 1.0, 1.0, 1.3]), Shape::FaceAndApex);
        assert_eq!(shape4(&[1.0, 1.2, 1.2, 1.0, 1.2, 1.2]), Shape::OppositePairEqual);
        assert_eq!(shape4(&[1.0, 1.0, 1.2, 1.0, 1.0, 1.2]), Shape::OppositePairEqual);
        assert_eq!(shape4(&[1.0, 1.1, 1.2, 1.3, 1.4, 1.5]), Shape::Other);
    }
}

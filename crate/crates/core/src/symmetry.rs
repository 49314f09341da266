//! Permutation symmetries of the KKT systems, isotropy subgroups, fixed-point
//! projections and the reduced problems posed on fixed-point subspaces.
//!
//! A permutation acts on `x = (lambda, edges...)` by `(P x)_i = x[map[i]]`;
//! the multiplier coordinate is always fixed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::continuation::Branch;
use crate::error::{usage, Error, Result};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::system::KktSystem;
use crate::tetrahedron::EDGE_VERTICES;

/// A coordinate permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    map: Vec<usize>,
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm { map: (0..n).collect() }
    }

    /// Builds `P` with `(P x)_i = x[map[i]]`; `map` must be a bijection.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &j in &map {
            if j >= n || seen[j] {
                return Err(Error::GroupConstruction(format!("{map:?} is not a permutation")));
            }
            seen[j] = true;
        }
        Ok(Perm { map })
    }

    /// Lifts an edge permutation to `(lambda, edges...)` by fixing index 0.
    pub fn lift_edges(edge_map: &[usize]) -> Result<Self> {
        let mut map = Vec::with_capacity(edge_map.len() + 1);
        map.push(0);
        map.extend(edge_map.iter().map(|&j| j + 1));
        Perm::from_map(map)
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// The edge part of the map with the multiplier removed.
    pub fn edge_map(&self) -> Vec<usize> {
        self.map[1..].iter().map(|&j| j - 1).collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&j| x[j]).collect()
    }

    /// `self * other`, acting as `x -> self(other(x))`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm {
            map: self.map.iter().map(|&j| other.map[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut map = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            map[j] = i;
        }
        Perm { map }
    }

    /// The 0/1 matrix with `M[i][map[i]] = 1`.
    pub fn matrix(&self) -> DenseMatrix {
        let n = self.map.len();
        DenseMatrix::from_fn(n, n, |i, j| f64::from(u8::from(self.map[i] == j)))
    }
}

/// A finite group of coordinate permutations, closed under products and inverses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    elements: Vec<Perm>,
}

impl GroupSpec {
    /// Validates the group axioms; the first coordinate must be fixed by every element.
    pub fn new(elements: Vec<Perm>) -> Result<Self> {
        let fail = |msg: alloc::string::String| Err(Error::GroupConstruction(msg));
        let Some(first) = elements.first() else {
            return fail("empty element list".into());
        };
        let n = first.len();
        for p in &elements {
            if p.len() != n {
                return fail(format!("mixed dimensions {} and {}", n, p.len()));
            }
            if p.map[0] != 0 {
                return fail(format!("{:?} moves the multiplier", p.map));
            }
        }
        let mut sorted = elements.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return fail("duplicate elements".into());
        }
        if !elements.iter().any(Perm::is_identity) {
            return fail("identity missing".into());
        }
        let contains = |p: &Perm| sorted.binary_search(p).is_ok();
        for p in &elements {
            if !contains(&p.inverse()) {
                return fail(format!("inverse of {:?} missing", p.map));
            }
            for q in &elements {
                if !contains(&p.compose(q)) {
                    return fail(format!("product of {:?} and {:?} missing", p.map, q.map));
                }
            }
        }
        Ok(GroupSpec { elements: sorted })
    }

    /// The smallest group containing `generators` (plus the identity).
    pub fn generated_by(generators: Vec<Perm>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::GroupConstruction("no generators".into()));
        };
        let mut elements = vec![Perm::identity(first.len())];
        let mut frontier = elements.clone();
        while let Some(p) = frontier.pop() {
            for g in &generators {
                let q = g.compose(&p);
                if !elements.contains(&q) {
                    if elements.len() >= 720 {
                        return Err(Error::GroupConstruction("generated group too large".into()));
                    }
                    elements.push(q.clone());
                    frontier.push(q);
                }
            }
        }
        GroupSpec::new(elements)
    }

    /// Elements in lexicographic order of their maps.
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Dimension of the space acted on.
    pub fn dim(&self) -> usize {
        self.elements[0].len()
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    /// Whether `self` is conjugate to `other` inside `ambient`.
    pub fn is_conjugate(&self, other: &GroupSpec, ambient: &GroupSpec) -> bool {
        self.order() == other.order()
            && ambient.elements.iter().any(|g| {
                let gi = g.inverse();
                self.elements.iter().all(|h| other.contains(&g.compose(h).compose(&gi)))
            })
    }

    fn subgroup_unchecked(elements: Vec<Perm>) -> Self {
        let mut elements = elements;
        elements.sort();
        GroupSpec { elements }
    }

    /// Elements common to both groups.
    pub fn intersection(&self, other: &GroupSpec) -> GroupSpec {
        GroupSpec::subgroup_unchecked(self.elements.iter().filter(|p| other.contains(p)).cloned().collect())
    }
}

/// All permutations of `(a, b, c)`, lifted to fix the multiplier.
pub fn triangle_group() -> GroupSpec {
    let maps = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let elements = maps.iter().map(|m| Perm::lift_edges(m).expect("valid map")).collect();
    GroupSpec::new(elements).expect("the symmetric group on three letters is closed")
}

/// The edge permutation induced by relabeling vertex `i` as `sigma[i]`:
/// the new edge `{i, j}` is the old edge `{sigma[i], sigma[j]}`.
pub fn vertex_to_edge_map(sigma: [usize; 4]) -> [usize; 6] {
    core::array::from_fn(|k| {
        let (i, j) = EDGE_VERTICES[k];
        let (u, v) = (sigma[i].min(sigma[j]), sigma[i].max(sigma[j]));
        EDGE_VERTICES
            .iter()
            .position(|&(x, y)| x.min(y) == u && x.max(y) == v)
            .expect("every vertex pair is an edge")
    })
}

/// Builds the tetrahedron group as the products `R Q`: `R` ranges over the
/// six relabelings that fix the apex (permuting `(a,b,c)` and `(A,B,C)` the
/// same way) and `Q` over the four choices of base face.
pub fn tetra_group_checked() -> Result<GroupSpec> {
    let fixing_apex = [[0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1]];
    let base_changes = [[0, 1, 2, 3], [1, 0, 2, 3], [2, 1, 0, 3], [3, 1, 2, 0]];
    let mut elements = Vec::with_capacity(24);
    for r in fixing_apex {
        let r = Perm::lift_edges(&vertex_to_edge_map(r))?;
        for q in base_changes {
            elements.push(r.compose(&Perm::lift_edges(&vertex_to_edge_map(q))?));
        }
    }
    let group = GroupSpec::new(elements)?;
    if group.order() != 24 {
        return Err(Error::GroupConstruction(format!("expected 24 elements, got {}", group.order())));
    }
    Ok(group)
}

/// The 24 edge permutations induced by relabeling the vertices of a tetrahedron.
pub fn tetra_group() -> GroupSpec {
    tetra_group_checked().expect("tetrahedron group construction")
}

/// Absolute tolerance (scaled by `max(1, |v|)`) for deciding `P v = v`.
pub const ISOTROPY_TOL: f64 = 1e-12;

/// Elements of `group` that fix `v`.
pub fn isotropy(group: &GroupSpec, v: &[f64]) -> GroupSpec {
    isotropy_with_tol(group, v, ISOTROPY_TOL)
}

/// [`isotropy`] with a caller-chosen tolerance, for numerically computed vectors.
pub fn isotropy_with_tol(group: &GroupSpec, v: &[f64], tol: f64) -> GroupSpec {
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let fixes = |p: &Perm| p.map.iter().enumerate().all(|(i, &j)| (v[j] - v[i]).abs() <= tol * scale);
    GroupSpec::subgroup_unchecked(group.elements.iter().filter(|p| fixes(p)).cloned().collect())
}

/// A matrix with entries `numerators / denominator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    n: usize,
    numerators: Vec<u32>,
    denominator: u32,
}

impl RationalMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn denominator(&self) -> u32 {
        self.denominator
    }

    /// Entry `(i, j)` as `(numerator, denominator)` in lowest terms.
    pub fn entry(&self, i: usize, j: usize) -> (u32, u32) {
        let (mut p, mut q) = (self.numerators[i * self.n + j], self.denominator);
        let g = gcd(p, q).max(1);
        p /= g;
        q /= g;
        (p, q)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let d = f64::from(self.denominator);
        DenseMatrix::from_fn(self.n, self.n, |i, j| f64::from(self.numerators[i * self.n + j]) / d)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.numerators[i * self.n + j] == self.numerators[j * self.n + i]))
    }

    /// Exact check of `M² = M`, i.e. `C C = d C` for the integer numerators `C`.
    pub fn is_idempotent(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let cc: u64 = (0..n)
                    .map(|k| u64::from(self.numerators[i * n + k]) * u64::from(self.numerators[k * n + j]))
                    .sum();
                cc == u64::from(self.denominator) * u64::from(self.numerators[i * n + j])
            })
        })
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The group average `(1/|H|) sum P`, kept in exact rational form.
pub fn fixed_projection(h: &GroupSpec) -> Result<RationalMatrix> {
    if h.elements.is_empty() {
        return Err(usage("projection onto the fixed space of an empty group"));
    }
    let n = h.dim();
    let mut numerators = vec![0u32; n * n];
    for p in &h.elements {
        for (i, &j) in p.map.iter().enumerate() {
            numerators[i * n + j] += 1;
        }
    }
    let denominator = u32::try_from(h.order()).map_err(|_| usage("group too large"))?;
    Ok(RationalMatrix {
        n,
        numerators,
        denominator,
    })
}

/// Orbits of the coordinates under `h`, each sorted, ordered by smallest member.
pub fn coordinate_orbits(h: &GroupSpec) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut label = vec![usize::MAX; n];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if label[i] != usize::MAX {
            continue;
        }
        let mut orbit: Vec<usize> = h.elements.iter().map(|p| p.map[i]).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &j in &orbit {
            label[j] = orbits.len();
        }
        orbits.push(orbit);
    }
    orbits
}

/// An isotropy subgroup together with its fixed-point subspace.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub subgroup: GroupSpec,
    pub projection: RationalMatrix,
    /// Orthonormal basis of the fixed space (columns `1_O / sqrt|O|` over coordinate orbits `O`).
    pub basis: DenseMatrix,
    pub fixed_dim: usize,
}

impl Reduction {
    pub fn new(subgroup: GroupSpec) -> Result<Self> {
        let projection = fixed_projection(&subgroup)?;
        let orbits = coordinate_orbits(&subgroup);
        let n = subgroup.dim();
        let columns: Vec<Vec<f64>> = orbits
            .iter()
            .map(|o| {
                let w = 1.0 / math::sqrt(o.len() as f64);
                (0..n).map(|i| if o.contains(&i) { w } else { 0.0 }).collect()
            })
            .collect();
        Ok(Reduction {
            fixed_dim: columns.len(),
            basis: DenseMatrix::from_columns(&columns),
            subgroup,
            projection,
        })
    }

    /// The reduction by the isotropy subgroup of `v`.
    pub fn from_vector(group: &GroupSpec, v: &[f64]) -> Result<Self> {
        Reduction::new(isotropy(group, v))
    }

    /// The trivial reduction: the whole space.
    pub fn full(n: usize) -> Self {
        Reduction::new(GroupSpec::subgroup_unchecked(vec![Perm::identity(n)])).expect("identity group")
    }

    pub fn dim(&self) -> usize {
        self.subgroup.dim()
    }

    /// Coordinates of `x` in the fixed-space basis.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.basis.transpose().mul_vec(x)
    }

    /// The point of the fixed space with coordinates `y`.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        self.basis.mul_vec(y)
    }

    /// `P_H x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.lift(&self.restrict(x))
    }
}

/// The problem restricted to the fixed space of a [`Reduction`]:
/// `F_H(y, p) = Bᵗ F(B y, p)` with Jacobian `Bᵗ J B`.
pub struct ReducedSystem<'a, S: KktSystem + ?Sized> {
    pub system: &'a S,
    pub reduction: &'a Reduction,
}

impl<'a, S: KktSystem + ?Sized> ReducedSystem<'a, S> {
    pub fn new(system: &'a S, reduction: &'a Reduction) -> Self {
        ReducedSystem { system, reduction }
    }

    pub fn dim(&self) -> usize {
        self.reduction.fixed_dim
    }

    pub fn residual(&self, y: &[f64], p: f64) -> Result<Vec<f64>> {
        let f = self.system.residual(&self.reduction.lift(y), p)?;
        Ok(self.reduction.restrict(&f))
    }

    pub fn jacobian(&self, y: &[f64]) -> Result<DenseMatrix> {
        Ok(self.system.jacobian(&self.reduction.lift(y))?.congruence(&self.reduction.basis))
    }

    pub fn param_derivative(&self, p: f64) -> Vec<f64> {
        self.reduction.restrict(&self.system.param_derivative(p))
    }

    /// `P_H F(x, p)` in full coordinates.
    pub fn projected_residual(&self, x: &[f64], p: f64) -> Result<Vec<f64>> {
        Ok(self.reduction.project(&self.system.residual(x, p)?))
    }

    /// `P_H J(x) P_H` in full coordinates.
    pub fn projected_jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        let p = self.reduction.projection.to_dense();
        Ok(p.mul(&self.system.jacobian(x)?).mul(&p))
    }
}

/// Relative tolerance for identifying two branches in [`orbit`].
pub const ORBIT_TOL: f64 = 1e-9;

fn same_states(x: &[f64], y: &[f64]) -> bool {
    x.len() == y.len()
        && x.iter()
            .zip(y)
            .all(|(a, b)| (a - b).abs() <= ORBIT_TOL * a.abs().max(b.abs()).max(1.0))
}

fn same_curve(u: &Branch, w: &Branch) -> bool {
    let (p, q) = (&u.points, &w.points);
    if p.len() != q.len() {
        return false;
    }
    let matches = |i: usize, j: usize| p[i].parameter == q[j].parameter && same_states(&p[i].state, &q[j].state);
    (0..p.len()).all(|i| matches(i, i)) || (0..p.len()).all(|i| matches(i, p.len() - 1 - i))
}

/// Images of `branch` under every group element, with duplicates removed.
/// The first entry is the branch itself; stability data is copied unchanged.
pub fn orbit(group: &GroupSpec, branch: &Branch) -> Vec<Branch> {
    let mut out: Vec<Branch> = vec![branch.clone()];
    for p in group.elements() {
        let image = branch.permuted(p);
        if !out.iter().any(|b| same_curve(b, &image)) {
            out.push(image);
        }
    }
    out
}

//! Small dense kernels for matrices up to 8×8.
//!
//! Everything is stack allocated in a fixed 64-entry buffer. The systems in
//! this crate never exceed 8 unknowns (7 KKT unknowns plus the continuation
//! parameter), so there is no need for a general linear-algebra dependency.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{usage, Error, Result};
use crate::math;

/// Largest supported row or column count.
pub const MAX_DIM: usize = 8;

/// Row-major `rows × cols` matrix with `rows, cols <= 8`.
#[derive(Clone, Copy, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl core::fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.rows {
            list.entry(&self.row(i));
        }
        list.finish()
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows <= MAX_DIM && cols <= MAX_DIM,
            "DenseMatrix supports at most {MAX_DIM}x{MAX_DIM}"
        );
        DenseMatrix {
            rows,
            cols,
            data: [0.0; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let rows = cols.first().map_or(0, |c| c.len());
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| s * self[(i, j)])
    }

    /// `Pᵗ M P`, the congruence used for projections and tangent restrictions.
    /// A symmetric input gives an exactly symmetric result, so rounding in the
    /// products cannot masquerade as asymmetry when the result is small.
    pub fn congruence(&self, p: &DenseMatrix) -> Self {
        let mut out = p.transpose().mul(self).mul(p);
        if self.rows == self.cols && self.symmetry_defect() == 0.0 {
            for i in 0..out.rows {
                for j in 0..i {
                    let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
                    out[(i, j)] = avg;
                    out[(j, i)] = avg;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.entries().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| self[(i, j)]))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(f64::is_finite)
    }

    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Embeds `self` in an `(n+1)×(n+1)` matrix with an extra column `col`,
    /// an extra row `row` and the bottom-right entry `corner`.
    pub fn bordered(&self, col: &[f64], row: &[f64], corner: f64) -> Self {
        let n = self.rows;
        assert_eq!(n, self.cols);
        assert_eq!(col.len(), n);
        assert_eq!(row.len(), n);
        let mut m = Self::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self[(i, j)];
            }
            m[(i, n)] = col[i];
            m[(n, i)] = row[i];
        }
        m[(n, n)] = corner;
        m
    }

    /// Partial-pivot LU factorization.
    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    /// Determinant by pivoted elimination, without any singularity threshold.
    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = *self;
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
                .unwrap_or(k);
            if a[(p, k)] == 0.0 {
                return 0.0;
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                for j in k..n {
                    a[(i, j)] -= factor * a[(k, j)];
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * MAX_DIM + j, b * MAX_DIM + j);
        }
    }

    /// Symmetric eigendecomposition by cyclic Jacobi rotations.
    pub fn sym_eigen(&self) -> Result<SymEigen> {
        sym_eigen(self)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * MAX_DIM + j]
    }
}

/// LU factors with row permutation, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    factors: DenseMatrix,
    perm: [usize; MAX_DIM],
    parity: i8,
}

impl Lu {
    /// Relative pivot threshold below which the matrix is declared singular.
    pub const PIVOT_TOL: f64 = 1e-14;

    fn factor(m: &DenseMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(usage("LU factorization needs a square matrix"));
        }
        let n = m.rows;
        let scale = m.max_abs();
        let mut a = *m;
        let mut perm = [0usize; MAX_DIM];
        for (i, p) in perm.iter_mut().enumerate().take(n) {
            *p = i;
        }
        let mut parity = 1i8;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
                .unwrap_or(k);
            if !(a[(p, k)].abs() >= Self::PIVOT_TOL * scale) || scale == 0.0 {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                a.swap_rows(p, k);
                perm.swap(p, k);
                parity = -parity;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                for j in k + 1..n {
                    a[(i, j)] -= factor * a[(k, j)];
                }
            }
        }
        Ok(Lu {
            factors: a,
            perm,
            parity,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.factors.rows;
        assert_eq!(rhs.len(), n);
        let mut x: Vec<f64> = (0..n).map(|i| rhs[self.perm[i]]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.factors[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.factors[(i, k)] * x[k];
            }
            x[i] /= self.factors[(i, i)];
        }
        x
    }

    /// Sign of the determinant: permutation parity times the pivot signs.
    pub fn det_sign(&self) -> i8 {
        let mut s = self.parity;
        for i in 0..self.factors.rows {
            if self.factors[(i, i)] < 0.0 {
                s = -s;
            }
        }
        s
    }

    pub fn determinant(&self) -> f64 {
        let d: f64 = (0..self.factors.rows).map(|i| self.factors[(i, i)]).product();
        f64::from(self.parity) * d
    }
}

/// Optional border for [`solve_bordered`]: the system becomes
/// `[[J, col], [rowᵗ, corner]]`.
#[derive(Debug, Clone, Copy)]
pub struct Border<'a> {
    pub col: &'a [f64],
    pub row: &'a [f64],
    pub corner: f64,
}

/// Solves `J x = rhs` (or its bordered extension) and reports the sign of the
/// determinant of the factored matrix.
pub fn solve_bordered(j: &DenseMatrix, rhs: &[f64], border: Option<Border<'_>>) -> Result<(Vec<f64>, i8)> {
    let m = match border {
        Some(b) => j.bordered(b.col, b.row, b.corner),
        None => *j,
    };
    if m.rows != rhs.len() {
        return Err(usage("right-hand side length does not match the bordered system"));
    }
    let lu = m.lu()?;
    Ok((lu.solve(rhs), lu.det_sign()))
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// Number of strictly negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0.0).count()
    }

    /// `V diag(values) Vᵗ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.values.len();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    math::sqrt(s)
}

fn sym_eigen(m: &DenseMatrix) -> Result<SymEigen> {
    if m.rows != m.cols {
        return Err(usage("eigendecomposition needs a square matrix"));
    }
    let norm = m.frobenius_norm();
    if !m.is_finite() {
        return Err(usage("matrix has non-finite entries"));
    }
    if m.symmetry_defect() > 1e-10 * norm {
        return Err(usage("matrix is not symmetric"));
    }
    let n = m.rows;
    let mut a = *m;
    // Work on the exactly symmetrized matrix.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        if off_diagonal_norm(&a) <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::hypot(theta, 1.0));
                let c = 1.0 / math::hypot(t, 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(SymEigen { values, vectors })
}

/// Orthonormal basis of the orthogonal complement of `g`, as the last `n-1`
/// columns of the Householder reflector that maps `g` onto the first axis.
pub fn orthogonal_complement(g: &[f64]) -> Result<DenseMatrix> {
    let n = g.len();
    let norm = math::sqrt(g.iter().map(|x| x * x).sum());
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateConstraint);
    }
    let mut u: Vec<f64> = g.to_vec();
    let shift = if g[0] >= 0.0 { norm } else { -norm };
    u[0] += shift;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    Ok(DenseMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * u[i] * u[col] / uu
    }))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| alpha * xi + yi).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm2(a);
    a.iter().map(|x| x / n).collect()
}

pub fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues() {
        let e = DenseMatrix::identity(3).sym_eigen().unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let m = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, -1.0]]);
        let e = m.sym_eigen().unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(m.sym_eigen(), Err(Error::Usage(_))));
    }

    #[test]
    fn identity_solve() {
        let (x, s) = solve_bordered(&DenseMatrix::identity(3), &[1.0, 0.0, 0.0], None).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
        assert_eq!(s, 1);
    }

    #[test]
    fn negative_determinant_sign() {
        let m = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let (_, s) = solve_bordered(&m, &[3.0, 4.0], None).unwrap();
        assert_eq!(s, -1);
    }

    #[test]
    fn singular_reports_pivot() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(m.lu().unwrap_err(), Error::Singular { pivot: 1 });
    }

    #[test]
    fn bordered_solve_matches_explicit() {
        let j = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let border = Border {
            col: &[1.0, 0.0],
            row: &[0.0, 1.0],
            corner: 0.0,
        };
        let (x, _) = solve_bordered(&j, &[1.0, 2.0, 3.0], Some(border)).unwrap();
        let full = j.bordered(&[1.0, 0.0], &[0.0, 1.0], 0.0);
        let back = full.mul_vec(&x);
        for (b, r) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - r).abs() < 1e-14);
        }
    }

    #[test]
    fn complement_is_orthonormal() {
        let g = [0.3, -1.2, 2.0, 0.5];
        let basis = orthogonal_complement(&g).unwrap();
        let gram = basis.transpose().mul(&basis);
        assert!(gram.sub(&DenseMatrix::identity(3)).max_abs() < 1e-14);
        for j in 0..3 {
            assert!(dot(&basis.column(j), &g).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_gradient_has_no_complement() {
        assert_eq!(
            orthogonal_complement(&[0.0, 0.0]).unwrap_err(),
            Error::DegenerateConstraint
        );
    }
}

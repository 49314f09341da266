//! Root scanning for the critical eigenvalues along the symmetric branch.

use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::math;

/// Derivative magnitude below which a root is flagged as non-transversal.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;

/// A parameter value at which a critical eigenvalue of the symmetric branch vanishes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StabilityBoundary {
    /// `"mu"` for the triangle, `"mu1"` or `"mu2"` for the tetrahedron.
    pub eigenvalue: alloc::string::String,
    pub parameter: f64,
    /// Finite-difference derivative of the eigenvalue with respect to the parameter.
    pub slope: f64,
    pub transversal: bool,
    /// Multiplicity of the vanishing eigenvalue in the full Jacobian.
    pub kernel_dim: usize,
}

impl StabilityBoundary {
    /// +1 when the eigenvalue increases through zero, -1 when it decreases.
    pub fn crossing_direction(&self) -> i8 {
        if self.slope > 0.0 {
            1
        } else if self.slope < 0.0 {
            -1
        } else {
            0
        }
    }
}

pub(crate) fn check_interval(lo: f64, hi: f64, grid_n: usize) -> Result<()> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(usage(format!("invalid scan interval [{lo}, {hi}]")));
    }
    if grid_n < 2 {
        return Err(usage(format!("scan grid needs at least 2 points, got {grid_n}")));
    }
    Ok(())
}

/// Brackets sign changes of `f` on a log-spaced grid and bisects each to a
/// relative width of `1e-12`. Returns `(root, slope)` pairs in increasing order.
pub(crate) fn scan_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid_n: usize) -> Result<Vec<(f64, f64)>> {
    check_interval(lo, hi, grid_n)?;
    let ratio = math::ln(hi / lo);
    let grid = |i: usize| {
        if i == grid_n - 1 {
            hi
        } else {
            lo * math::exp(ratio * i as f64 / (grid_n - 1) as f64)
        }
    };
    let mut roots = Vec::new();
    let mut x0 = grid(0);
    let mut f0 = f(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for i in 1..grid_n {
        let x1 = grid(i);
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(&f, x0, f0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots
        .into_iter()
        .map(|r| {
            let h = 1e-6 * r;
            (r, (f(r + h) - f(r - h)) / (2.0 * h))
        })
        .collect())
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, f_lo: f64, mut hi: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 * mid {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let roots = scan_roots(|x| (x - 2.0) * (x - 30.0), 0.5, 100.0, 50).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - 2.0).abs() < 1e-10);
        assert!(roots[0].1 < 0.0);
        assert!((roots[1].0 - 30.0).abs() < 1e-9);
        assert!(roots[1].1 > 0.0);
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(scan_roots(|x| x, 2.0, 1.0, 10).is_err());
        assert!(scan_roots(|x| x, 0.0, 1.0, 10).is_err());
        assert!(scan_roots(|x| x, 1.0, 2.0, 1).is_err());
    }
}

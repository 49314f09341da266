use alloc::vec::Vec;

use super::ContinuationSettings;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, solve_bordered, Border};
use crate::symmetry::ReducedSystem;
use crate::system::KktSystem;

/// How the parameter is treated by the corrector.
#[derive(Debug, Clone, Copy)]
pub enum ParameterMode<'a> {
    /// The parameter is held at its initial value.
    Fixed,
    /// The parameter is an unknown and `<tangent, (y, p) - anchor> = h` is appended.
    /// `anchor_y` and `tangent` are in reduced coordinates; `tangent` has the
    /// parameter component last.
    Arclength {
        anchor_y: &'a [f64],
        anchor_p: f64,
        tangent: &'a [f64],
        h: f64,
    },
}

/// A converged corrector result in reduced coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub y: Vec<f64>,
    pub p: f64,
    /// Number of linear solves performed.
    pub iterations: usize,
    pub residual: f64,
    /// Sign of the determinant of the (bordered) corrector matrix at the solution.
    pub det_sign: i8,
}

/// Residual norm with the constraint row measured relative to the size of
/// the constrained quantity once that exceeds one.
pub(crate) fn scaled_norm<S: KktSystem + ?Sized>(rs: &ReducedSystem<'_, S>, f: &[f64], p: f64) -> f64 {
    let target = 0.5 * (rs.system.param_derivative(p)[0] * p).abs();
    let scale = target.max(1.0);
    f.iter()
        .enumerate()
        .map(|(i, v)| if i == 0 { v.abs() / scale } else { v.abs() })
        .fold(0.0, f64::max)
}

/// Newton's method on the reduced system, optionally bordered by the
/// pseudo-arclength condition.
pub fn newton_correct<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    y0: &[f64],
    p0: f64,
    mode: ParameterMode<'_>,
    settings: &ContinuationSettings,
) -> Result<Corrected> {
    let k = rs.dim();
    let mut y = y0.to_vec();
    let mut p = p0;
    let eval = |y: &[f64], p: f64| -> Result<(Vec<f64>, f64)> {
        let f = rs.residual(y, p).map_err(|_| Error::DomainExit)?;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainExit);
        }
        let mut norm = scaled_norm(rs, &f, p);
        if let ParameterMode::Arclength { anchor_y, anchor_p, tangent, h } = mode {
            let arc = arclength_residual(y, p, anchor_y, anchor_p, tangent, h);
            norm = norm.max(arc.abs());
        }
        Ok((f, norm))
    };
    if !rs.system.feasible(&rs.reduction.lift(&y)) {
        return Err(Error::DomainExit);
    }
    let (mut f, mut norm) = eval(&y, p)?;
    let initial = norm;
    let mut iterations = 0;
    loop {
        if norm < settings.newton_tol {
            let det_sign = final_det_sign(rs, &y, p, mode);
            return Ok(Corrected {
                y,
                p,
                iterations,
                residual: norm,
                det_sign,
            });
        }
        if iterations >= settings.newton_max_iters || norm > 1e3 * initial.max(settings.newton_tol) {
            return Err(Error::CorrectorFailed {
                iterations,
                residual: norm,
            });
        }
        let j = rs.jacobian(&y)?;
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        match mode {
            ParameterMode::Fixed => {
                let (dy, _) = solve_bordered(&j, &rhs, None)?;
                for (yi, d) in y.iter_mut().zip(&dy) {
                    *yi += d;
                }
            }
            ParameterMode::Arclength { anchor_y, anchor_p, tangent, h } => {
                let fp = rs.param_derivative(p);
                let mut rhs = rhs;
                rhs.push(-arclength_residual(&y, p, anchor_y, anchor_p, tangent, h));
                let border = Border {
                    col: &fp,
                    row: &tangent[..k],
                    corner: tangent[k],
                };
                let (d, _) = solve_bordered(&j, &rhs, Some(border))?;
                for (yi, di) in y.iter_mut().zip(&d) {
                    *yi += di;
                }
                p += d[k];
            }
        }
        iterations += 1;
        if !rs.system.feasible(&rs.reduction.lift(&y)) || !p.is_finite() {
            return Err(Error::DomainExit);
        }
        (f, norm) = eval(&y, p)?;
    }
}

fn arclength_residual(y: &[f64], p: f64, anchor_y: &[f64], anchor_p: f64, tangent: &[f64], h: f64) -> f64 {
    let k = y.len();
    let dy: Vec<f64> = y.iter().zip(anchor_y).map(|(a, b)| a - b).collect();
    dot(&tangent[..k], &dy) + tangent[k] * (p - anchor_p) - h
}

fn final_det_sign<S: KktSystem + ?Sized>(rs: &ReducedSystem<'_, S>, y: &[f64], p: f64, mode: ParameterMode<'_>) -> i8 {
    let Ok(j) = rs.jacobian(y) else { return 0 };
    let m = match mode {
        ParameterMode::Fixed => j,
        ParameterMode::Arclength { tangent, .. } => {
            let k = y.len();
            j.bordered(&rs.param_derivative(p), &tangent[..k], tangent[k])
        }
    };
    m.lu().map(|lu| lu.det_sign()).unwrap_or(0)
}

/// Unit tangent of the solution curve at `(y, p)` with `<t, prev> > 0`.
pub(crate) fn tangent_at<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    y: &[f64],
    p: f64,
    prev: &[f64],
) -> Result<Vec<f64>> {
    let k = y.len();
    let j = rs.jacobian(y)?;
    let fp = rs.param_derivative(p);
    let mut rhs = alloc::vec![0.0; k + 1];
    rhs[k] = 1.0;
    let border = Border {
        col: &fp,
        row: &prev[..k],
        corner: prev[k],
    };
    let (z, _) = solve_bordered(&j, &rhs, Some(border))?;
    let n = crate::linalg::norm2(&z);
    let t: Vec<f64> = z.iter().map(|v| v / n).collect();
    if norm_inf(&t).is_finite() {
        Ok(t)
    } else {
        Err(Error::Singular { pivot: k })
    }
}

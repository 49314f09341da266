use alloc::vec::Vec;

use super::newton::{newton_correct, tangent_at, ParameterMode};
use super::trace::make_point;
use super::{BifurcationEvent, BranchPoint, BranchSwitchData, ContinuationSettings};
use crate::error::{usage, Error, Result};
use crate::linalg::{axpy, dot, norm2, norm_inf, normalized};
use crate::symmetry::{GroupSpec, Perm, ReducedSystem, Reduction};
use crate::system::KktSystem;

/// Parameter offset of the asymptotic seeds.
pub const EPSILON: f64 = 1e-3;
/// Kernel offset of the perturbation seeds.
pub const DELTA: f64 = 1e-3;
/// Step of the second difference giving `A⁰`.
const A0_STEP: f64 = 1e-4;
/// `|A⁰|` below which the asymptotic formula is not used.
const A0_TOL: f64 = 1e-8;
/// `|B⁰|` below which transversality is considered to fail.
const B0_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum SeedMethod {
    /// `x = g(p0 + eps) + eps m v`, corrected at fixed parameter.
    Asymptotic,
    /// `x0 + delta v`, corrected with `<v, y - y0> = delta`.
    Perturbation,
}

#[derive(Debug, Clone)]
pub struct SwitchOutcome {
    pub data: BranchSwitchData,
    /// Converged starting points; each tangent points away from the event.
    pub seeds: Vec<BranchPoint>,
    /// For a pitchfork, the symmetry exchanging its two halves; only one seed
    /// is returned and the other half is its image.
    pub mirror: Option<Perm>,
    pub method: SeedMethod,
}

/// An element fixing `x0` and reversing `v`, if the group has one.
pub fn mirror_symmetry(group: &GroupSpec, x0: &[f64], v: &[f64]) -> Option<Perm> {
    let xs = x0.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let vs = norm_inf(v);
    group
        .elements()
        .iter()
        .find(|p| {
            p.map()
                .iter()
                .enumerate()
                .all(|(i, &j)| (x0[j] - x0[i]).abs() <= 1e-8 * xs && (v[j] + v[i]).abs() <= 1e-6 * vs)
        })
        .cloned()
}

/// Computes the Lyapunov–Schmidt coefficients at `event` in the fixed space of
/// `reduction` and returns converged seeds on the bifurcating branch.
/// `kernel_vector` (full coordinates) selects the direction within the kernel.
pub fn branch_switch<S: KktSystem + ?Sized>(
    system: &S,
    event: &BifurcationEvent,
    kernel_vector: &[f64],
    reduction: &Reduction,
    settings: &ContinuationSettings,
) -> Result<SwitchOutcome> {
    let rs = ReducedSystem::new(system, reduction);
    let k = rs.dim();
    let n = reduction.dim();
    let y0 = reduction.restrict(&event.state);
    let p0 = event.parameter;
    let hint = reduction.restrict(kernel_vector);
    if norm2(&hint) < 0.5 * norm2(kernel_vector) {
        return Err(usage("kernel vector does not lie in the fixed space of the reduction"));
    }
    let hint = normalized(&hint);

    let eig = rs.jacobian(&y0)?.sym_eigen()?;
    let idx = (0..k)
        .min_by(|&a, &b| eig.values[a].abs().total_cmp(&eig.values[b].abs()))
        .expect("nonempty fixed space");
    let mut v = eig.vector(idx);
    if dot(&v, &hint) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    // The reduced Jacobian is symmetric, so the left kernel vector is v itself.
    let v_star = v.clone();

    let f = |y: &[f64]| rs.residual(y, p0);
    let fp = f(&axpy(A0_STEP, &v, &y0))?;
    let f0 = f(&y0)?;
    let fm = f(&axpy(-A0_STEP, &v, &y0))?;
    let second: Vec<f64> = (0..k).map(|i| (fp[i] - 2.0 * f0[i] + fm[i]) / (A0_STEP * A0_STEP)).collect();
    let a0 = dot(&v_star, &second);

    let t_parent = {
        let mut t = reduction.restrict(&event.tangent[..n]);
        t.push(event.tangent[n]);
        t
    };
    if t_parent[k].abs() < 1e-12 {
        return Err(Error::NotTransversal { derivative: 0.0 });
    }
    let gdot: Vec<f64> = t_parent[..k].iter().map(|x| x / t_parent[k]).collect();
    let dp = 1e-4 * p0.abs().max(1e-3);
    let jp = rs.jacobian(&axpy(dp, &gdot, &y0))?;
    let jm = rs.jacobian(&axpy(-dp, &gdot, &y0))?;
    let b0 = dot(&v_star, &jp.sub(&jm).scale(0.5 / dp).mul_vec(&v));
    if b0.abs() < B0_TOL {
        return Err(Error::NotTransversal { derivative: b0 });
    }

    let v_full = reduction.lift(&v);
    let mirror = mirror_symmetry(system.group(), &event.state, &v_full);
    let m = if a0.abs() >= A0_TOL { -2.0 * b0 / a0 } else { f64::INFINITY };
    let data = BranchSwitchData {
        v: v_full,
        v_star: reduction.lift(&v_star),
        a0,
        b0,
        m,
        epsilon: EPSILON,
    };

    let scale = norm_inf(&y0).max(1.0);
    if mirror.is_none() && (m * EPSILON).abs() <= 0.1 * scale {
        if let Some(seeds) = asymptotic_seeds(&rs, &y0, p0, &gdot, &v, m, settings) {
            return Ok(SwitchOutcome {
                data,
                seeds,
                mirror,
                method: SeedMethod::Asymptotic,
            });
        }
    }
    let signs: &[f64] = if mirror.is_some() { &[1.0] } else { &[-1.0, 1.0] };
    let mut seeds = Vec::new();
    for &sign in signs {
        let dir: Vec<f64> = v.iter().map(|x| sign * x).chain([0.0]).collect();
        let guess = axpy(DELTA, &dir[..k], &y0);
        let mode = ParameterMode::Arclength {
            anchor_y: &y0,
            anchor_p: p0,
            tangent: &dir,
            h: DELTA,
        };
        let c = newton_correct(&rs, &guess, p0, mode, settings)?;
        seeds.push(seed_point(&rs, &c.y, c.p, &y0, p0)?);
    }
    Ok(SwitchOutcome {
        data,
        seeds,
        mirror,
        method: SeedMethod::Perturbation,
    })
}

fn asymptotic_seeds<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    y0: &[f64],
    p0: f64,
    gdot: &[f64],
    v: &[f64],
    m: f64,
    settings: &ContinuationSettings,
) -> Option<Vec<BranchPoint>> {
    let mut seeds = Vec::new();
    for eps in [-EPSILON, EPSILON] {
        let parent = axpy(eps, gdot, y0);
        let guess = axpy(eps * m, v, &parent);
        let c = newton_correct(rs, &guess, p0 + eps, ParameterMode::Fixed, settings).ok()?;
        // Reject a seed that fell back onto the parent branch.
        let offset = dot(v, &axpy(-1.0, &parent, &c.y));
        if offset.abs() < 0.25 * (eps * m).abs() {
            return None;
        }
        seeds.push(seed_point(rs, &c.y, c.p, y0, p0).ok()?);
    }
    Some(seeds)
}

fn seed_point<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    y: &[f64],
    p: f64,
    y0: &[f64],
    p0: f64,
) -> Result<BranchPoint> {
    let mut away: Vec<f64> = axpy(-1.0, y0, y);
    away.push(p - p0);
    let t = tangent_at(rs, y, p, &normalized(&away))?;
    let k = y.len();
    let mut tangent = rs.reduction.lift(&t[..k]);
    tangent.push(t[k]);
    make_point(rs.system, rs.reduction.lift(y), p, 0.0, tangent)
}

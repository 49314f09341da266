use alloc::format;
use alloc::vec::Vec;

use super::newton::{newton_correct, tangent_at, Corrected, ParameterMode};
use super::{BifurcationEvent, BranchPoint, ContinuationSettings, EventKind};
use crate::error::{usage, Error, Result};
use crate::linalg::{axpy, dot, norm2, norm_inf, normalized, SymEigen};
use crate::symmetry::{GroupSpec, Perm, ReducedSystem, Reduction};
use crate::system::KktSystem;

/// Why a trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum StopReason {
    MaxPoints,
    WindowExit,
    /// Steps toward a degenerate configuration failed down to the minimum step.
    DomainExit,
    /// The corrector failed down to the minimum step away from the domain boundary.
    StepUnderflow,
    ClosedLoop,
    /// The branch returned to the fixed space of its mirror symmetry.
    SymmetryRestored,
}

/// What to trace and where to stop.
#[derive(Debug, Clone, Copy)]
pub struct TraceRequest<'a> {
    /// Id recorded as the source of detected events.
    pub branch_id: usize,
    /// Allowed parameter range.
    pub window: (f64, f64),
    /// Preferred direction `(dx, dp)` in full coordinates; the initial tangent
    /// is oriented to have a positive inner product with it.
    pub direction: &'a [f64],
    /// Kind given to detected bifurcations.
    pub bifurcation_kind: EventKind,
    /// For one half of a pitchfork: stop when the branch crosses back into the
    /// fixed space of this element.
    pub mirror: Option<&'a Perm>,
}

#[derive(Debug, Clone)]
pub struct TraceOutput {
    pub points: Vec<BranchPoint>,
    pub events: Vec<BifurcationEvent>,
    pub stop: StopReason,
}

fn full_eigen<S: KktSystem + ?Sized>(system: &S, x: &[f64]) -> Result<SymEigen> {
    system.jacobian(x)?.sym_eigen()
}

/// Builds a branch point at the full state `x`, with the stability, shape and
/// inertia data recorded.
pub fn make_point<S: KktSystem + ?Sized>(
    system: &S,
    x: Vec<f64>,
    parameter: f64,
    arclength: f64,
    tangent: Vec<f64>,
) -> Result<BranchPoint> {
    let eig = full_eigen(system, &x)?;
    let negative_count = eig.negative_count();
    let det_sign = if eig.values.contains(&0.0) {
        0
    } else if negative_count % 2 == 0 {
        1
    } else {
        -1
    };
    let class = system.classify(&x)?;
    Ok(BranchPoint {
        energy: system.energy(&x),
        stability: class.stability,
        shape: class.shape,
        state: x,
        parameter,
        arclength,
        det_sign,
        negative_count,
        tangent,
    })
}

fn lift_tangent<S: KktSystem + ?Sized>(rs: &ReducedSystem<'_, S>, t: &[f64]) -> Vec<f64> {
    let k = rs.dim();
    let mut out = rs.reduction.lift(&t[..k]);
    out.push(t[k]);
    out
}

fn restrict_tangent<S: KktSystem + ?Sized>(rs: &ReducedSystem<'_, S>, t: &[f64]) -> Vec<f64> {
    let n = rs.reduction.dim();
    let mut out = rs.reduction.restrict(&t[..n]);
    out.push(t[n]);
    out
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::CorrectorFailed { .. } | Error::Singular { .. } | Error::DomainExit)
}

/// Minimum cosine between consecutive tangents for a step to be accepted.
const MAX_TURN_COS: f64 = 0.8;

/// Traces a branch from a converged `start` by pseudo-arclength continuation
/// in the fixed space of `rs`, recording every point and the localized events.
pub fn trace_branch<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    start: &BranchPoint,
    request: &TraceRequest<'_>,
    settings: &ContinuationSettings,
) -> Result<TraceOutput> {
    settings.validate()?;
    let (lo, hi) = request.window;
    if !(lo < hi) {
        return Err(usage(format!("invalid parameter window [{lo}, {hi}]")));
    }
    let system = rs.system;
    let n = rs.reduction.dim();
    if request.direction.len() != n + 1 {
        return Err(usage("direction must have one entry per state component plus the parameter"));
    }
    let mut y = rs.reduction.restrict(&start.state);
    let mut p = start.parameter;
    let prev = normalized(&restrict_tangent(rs, request.direction));
    if !norm2(&prev).is_finite() || norm2(&prev) == 0.0 {
        return Err(usage("direction has no component in the fixed space"));
    }
    let mut t = tangent_at(rs, &y, p, &prev)?;
    let mut first = make_point(system, start.state.clone(), p, 0.0, lift_tangent(rs, &t))?;
    first.arclength = 0.0;
    let scale = norm_inf(&start.state).max(1.0);
    let watched = watched_elements(rs);

    let mut points = alloc::vec![first];
    let mut events = Vec::new();
    let mut h = settings.h0;
    let mut s = 0.0;
    let mut saw_domain_exit = false;
    let stop = loop {
        if points.len() >= settings.max_points {
            break StopReason::MaxPoints;
        }
        let pred_y = axpy(h, &t[..y.len()], &y);
        let pred_p = p + h * t[y.len()];
        let mode = ParameterMode::Arclength {
            anchor_y: &y,
            anchor_p: p,
            tangent: &t,
            h,
        };
        let attempt = newton_correct(rs, &pred_y, pred_p, mode, settings)
            .and_then(|c| tangent_at(rs, &c.y, c.p, &t).map(|t1| (c, t1)));
        let accepted = match attempt {
            Ok((c, t1)) if dot(&t1, &t) >= MAX_TURN_COS || h <= settings.h_min => Some((c, t1)),
            Ok(_) => None,
            Err(e) if recoverable(&e) => {
                saw_domain_exit |= matches!(e, Error::DomainExit);
                None
            }
            Err(e) => return Err(e),
        };
        let Some((c, t1)) = accepted else {
            h *= settings.shrink;
            if h < settings.h_min {
                if points.len() == 1 {
                    return Err(Error::TraceAborted(format!(
                        "no step accepted from parameter {p} (branch {})",
                        request.branch_id
                    )));
                }
                break if saw_domain_exit {
                    StopReason::DomainExit
                } else {
                    StopReason::StepUnderflow
                };
            }
            continue;
        };
        saw_domain_exit = false;
        let (c, t1, leaving) = if c.p < lo || c.p > hi {
            // Land the last point on the window boundary.
            let bound = if c.p < lo { lo } else { hi };
            let theta = (bound - p) / (c.p - p);
            let guess = axpy(theta, &axpy(-1.0, &y, &c.y), &y);
            match newton_correct(rs, &guess, bound, ParameterMode::Fixed, settings) {
                Ok(cb) if (p - bound).abs() > 1e-12 * bound.abs().max(1.0) => {
                    let tb = tangent_at(rs, &cb.y, cb.p, &t1).unwrap_or(t1);
                    (cb, tb, true)
                }
                _ => break StopReason::WindowExit,
            }
        } else {
            (c, t1, false)
        };
        let x = rs.reduction.lift(&c.y);
        let last = points.last().expect("at least the start point");
        let step = norm2(&axpy(-1.0, &last.extended(), &{
            let mut e = x.clone();
            e.push(c.p);
            e
        }));

        if let Some(m) = watched.iter().find(|m| restores_symmetry(m, &last.state, &x, scale)) {
            if let Some(end) = symmetry_endpoint(rs, m, last, &t, h, scale, s, settings) {
                points.push(end);
            }
            break StopReason::SymmetryRestored;
        }

        s += step;
        let point = make_point(system, x, c.p, s, lift_tangent(rs, &t1))?;
        if settings.detection && point.negative_count != last.negative_count {
            events.extend(detect_and_localize(
                rs,
                last,
                &point,
                h,
                request.bifurcation_kind,
                request.branch_id,
                settings,
            ));
        }
        let closes = points.len() > 3 && {
            let d0 = norm2(&axpy(-1.0, &points[0].extended(), &point.extended()));
            d0 < 0.5 * h
        };
        points.push(point);
        y = c.y;
        p = c.p;
        t = t1;
        if leaving {
            break StopReason::WindowExit;
        }
        if closes {
            break StopReason::ClosedLoop;
        }
        if c.iterations <= settings.contraction_target / 2 {
            h = (h * settings.growth).min(settings.h_max);
        } else if c.iterations > settings.contraction_target {
            h = (h * settings.shrink).max(settings.h_min);
        }
    };
    Ok(TraceOutput { points, events, stop })
}

/// Involutions outside the traced subgroup. A branch reaching the fixed space
/// of one of them has met a branch of higher symmetry.
fn watched_elements<S: KktSystem + ?Sized>(rs: &ReducedSystem<'_, S>) -> Vec<Perm> {
    let h = &rs.reduction.subgroup;
    rs.system
        .group()
        .elements()
        .iter()
        .filter(|m| !m.is_identity() && m.compose(m).is_identity() && !h.contains(m))
        .cloned()
        .collect()
}

/// Whether the segment from `last` to `x` crosses or lands in the fixed space of `m`.
fn restores_symmetry(m: &Perm, last: &[f64], x: &[f64], scale: f64) -> bool {
    let u = axpy(-1.0, &m.apply(last), last);
    if norm_inf(&u) <= SYMMETRY_TOL * scale {
        return false;
    }
    let d = axpy(-1.0, &m.apply(x), x);
    norm_inf(&d) <= SYMMETRY_TOL * scale || dot(&u, &d) <= 0.0
}

/// Relative distance below which a point counts as fixed by an element.
const SYMMETRY_TOL: f64 = 1e-9;

/// Bisects the step from `last` for the first corrected point in the fixed
/// space of `m`, then corrects it inside `Fix(<H, m>)` at that parameter.
#[allow(clippy::too_many_arguments)]
fn symmetry_endpoint<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    m: &Perm,
    last: &BranchPoint,
    t: &[f64],
    h: f64,
    scale: f64,
    arclength: f64,
    settings: &ContinuationSettings,
) -> Option<BranchPoint> {
    let y = rs.reduction.restrict(&last.state);
    let k = y.len();
    let correct = |hh: f64| {
        let mode = ParameterMode::Arclength {
            anchor_y: &y,
            anchor_p: last.parameter,
            tangent: t,
            h: hh,
        };
        newton_correct(rs, &axpy(hh, &t[..k], &y), last.parameter + hh * t[k], mode, settings).ok()
    };
    let (mut a, mut b) = (0.0, h);
    let mut best: Option<Corrected> = None;
    for _ in 0..60 {
        if b - a <= 1e-12 * h.max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        match correct(mid) {
            Some(c) if !restores_symmetry(m, &last.state, &rs.reduction.lift(&c.y), scale) => a = mid,
            Some(c) => {
                b = mid;
                best = Some(c);
            }
            None => b = mid,
        }
    }
    let (xi, pi) = match (best, correct(a)) {
        (_, Some(c)) => (rs.reduction.lift(&c.y), c.p),
        (Some(c), None) => (rs.reduction.lift(&c.y), c.p),
        (None, None) => (last.state.clone(), last.parameter),
    };
    let mut generators = rs.reduction.subgroup.elements().to_vec();
    generators.push(m.clone());
    let red = Reduction::new(GroupSpec::generated_by(generators).ok()?).ok()?;
    let sub = ReducedSystem::new(rs.system, &red);
    let c: Corrected = newton_correct(&sub, &red.restrict(&xi), pi, ParameterMode::Fixed, settings).ok()?;
    let c = refine_meeting_point(rs, &sub, c, settings);
    let x = red.lift(&c.y);
    let step = norm2(&axpy(-1.0, &last.state, &x)) + (c.p - last.parameter).abs();
    make_point(rs.system, x, c.p, arclength + step, last.tangent.clone()).ok()
}

/// Secant iteration in the parameter along the symmetric branch of `sub` for
/// the point where the Jacobian in the fixed space of `rs` is singular. Keeps
/// `start` if the iteration wanders off.
fn refine_meeting_point<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    sub: &ReducedSystem<'_, S>,
    start: Corrected,
    settings: &ContinuationSettings,
) -> Corrected {
    let det_at = |c: &Corrected| -> Option<f64> {
        let y = rs.reduction.restrict(&sub.reduction.lift(&c.y));
        Some(rs.jacobian(&y).ok()?.determinant())
    };
    let p0 = start.p;
    let dp = 1e-6 * p0.abs().max(1e-3);
    let Some(mut c_prev) = newton_correct(sub, &start.y, p0 + dp, ParameterMode::Fixed, settings).ok() else {
        return start;
    };
    let (Some(mut f_prev), Some(mut f)) = (det_at(&c_prev), det_at(&start)) else {
        return start;
    };
    let mut c = start.clone();
    for _ in 0..30 {
        if f == f_prev {
            break;
        }
        let p_next = c.p - f * (c.p - c_prev.p) / (f - f_prev);
        if !p_next.is_finite() || (p_next - p0).abs() > 1e-2 * p0.abs().max(1.0) {
            return start;
        }
        let Some(c_next) = newton_correct(sub, &c.y, p_next, ParameterMode::Fixed, settings).ok() else {
            return start;
        };
        let Some(f_next) = det_at(&c_next) else {
            return start;
        };
        let done = (c_next.p - c.p).abs() <= 1e-13 * c.p.abs().max(1.0);
        (c_prev, f_prev) = (core::mem::replace(&mut c, c_next), f);
        f = f_next;
        if done || f == 0.0 {
            break;
        }
    }
    c
}

/// Localizes the zero crossings of the full Jacobian's eigenvalues between two
/// consecutive points whose inertia differs, and groups coincident roots into
/// events. Crossings are found by an Illinois iteration on the step length
/// along the chord with the arclength condition, with bisection fallback.
pub fn detect_and_localize<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    prev: &BranchPoint,
    next: &BranchPoint,
    h: f64,
    kind: EventKind,
    branch_id: usize,
    settings: &ContinuationSettings,
) -> Vec<BifurcationEvent> {
    let (n0, n1) = (prev.negative_count, next.negative_count);
    if n0 == n1 {
        return Vec::new();
    }
    let n = rs.reduction.dim();
    let y0 = rs.reduction.restrict(&prev.state);
    let t0 = restrict_tangent(rs, &prev.tangent);
    let (Ok(e0), Ok(e1)) = (full_eigen(rs.system, &prev.state), full_eigen(rs.system, &next.state)) else {
        return Vec::new();
    };
    let mut roots: Vec<(f64, Vec<f64>, bool)> = Vec::new();
    for k in n0.min(n1)..n0.max(n1) {
        let (p, x, ok) = localize_index(rs, &y0, prev.parameter, &t0, h, k, e0.values[k], e1.values[k], next, settings);
        roots.push((p, x, ok));
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<Vec<(f64, Vec<f64>, bool)>> = Vec::new();
    for r in roots {
        match groups.last_mut() {
            Some(g) if (r.0 - g[0].0).abs() <= 1e-8 * r.0.abs().max(1e-300) || near_kernel_dim(rs.system, &g[0].1) > g.len() => {
                g.push(r)
            }
            _ => groups.push(alloc::vec![r]),
        }
    }
    let fold = (prev.tangent[n] > 0.0) != (next.tangent[n] > 0.0);
    groups
        .into_iter()
        .filter_map(|g| {
            let (p, x, _) = g[0].clone();
            let precise = g.iter().all(|r| r.2);
            let eig = full_eigen(rs.system, &x).ok()?;
            let mut order: Vec<usize> = (0..eig.values.len()).collect();
            order.sort_by(|&a, &b| eig.values[a].abs().total_cmp(&eig.values[b].abs()));
            let kernel_basis: Vec<Vec<f64>> = order[..g.len()].iter().map(|&i| eig.vector(i)).collect();
            let jnorm = crate::math::sqrt(eig.values.iter().map(|v| v * v).sum::<f64>());
            let residual_eigenvalue = eig.values[order[0]].abs() / jnorm.max(f64::MIN_POSITIVE);
            let tangent = tangent_at(rs, &rs.reduction.restrict(&x), p, &t0)
                .map(|t| lift_tangent(rs, &t))
                .unwrap_or_else(|_| next.tangent.clone());
            let event_kind = if fold && g.len() == 1 { EventKind::Turning } else { kind };
            Some(BifurcationEvent {
                id: 0,
                kind: event_kind,
                parameter: p,
                kernel_dim: g.len(),
                kernel_basis,
                source_branch: branch_id,
                state: x,
                tangent,
                residual_eigenvalue,
                reduced_precision: !precise || residual_eigenvalue > 1e-6,
                note: None,
            })
        })
        .collect()
}

/// Number of Jacobian eigenvalues below `1e-7` of its norm. Roots of a
/// multiple eigenvalue are resolved only to the conditioning of the
/// eigenproblem, which can exceed the parameter grouping tolerance.
fn near_kernel_dim<S: KktSystem + ?Sized>(system: &S, x: &[f64]) -> usize {
    let Ok(eig) = full_eigen(system, x) else {
        return 0;
    };
    let norm = crate::math::sqrt(eig.values.iter().map(|v| v * v).sum::<f64>());
    eig.values.iter().filter(|v| v.abs() <= 1e-7 * norm).count()
}

/// Root of the `k`-th eigenvalue of the full Jacobian along the arclength
/// chord from `(y0, p0)`; returns `(parameter, full state, converged)`.
#[allow(clippy::too_many_arguments)]
fn localize_index<S: KktSystem + ?Sized>(
    rs: &ReducedSystem<'_, S>,
    y0: &[f64],
    p0: f64,
    t0: &[f64],
    h1: f64,
    k: usize,
    f0: f64,
    f1: f64,
    next: &BranchPoint,
    settings: &ContinuationSettings,
) -> (f64, Vec<f64>, bool) {
    let kdim = y0.len();
    let eval = |h: f64| -> Option<(f64, Corrected)> {
        let pred_y = axpy(h, &t0[..kdim], y0);
        let pred_p = p0 + h * t0[kdim];
        let mode = ParameterMode::Arclength {
            anchor_y: y0,
            anchor_p: p0,
            tangent: t0,
            h,
        };
        let c = newton_correct(rs, &pred_y, pred_p, mode, settings).ok()?;
        let e = full_eigen(rs.system, &rs.reduction.lift(&c.y)).ok()?;
        Some((e.values[k], c))
    };
    let (mut a, mut fa, mut pa) = (0.0, f0, p0);
    let (mut b, mut fb, mut pb) = (h1, f1, next.parameter);
    let mut best: Option<(f64, Corrected)> = None;
    let mut side = 0i8;
    let mut converged = false;
    let mut force_bisect = false;
    for _ in 0..200 {
        let width_ok = (pb - pa).abs() <= 1e-10 * pa.abs().max(1e-300) && (b - a) <= 1e-9 * h1;
        if width_ok {
            converged = true;
            break;
        }
        let mut m = if force_bisect { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !(m > a && m < b) {
            m = 0.5 * (a + b);
        }
        force_bisect = false;
        let Some((fm, c)) = eval(m).or_else(|| {
            let mid = 0.5 * (a + b);
            m = mid;
            eval(mid)
        }) else {
            break;
        };
        let pm = c.p;
        let better = best.as_ref().is_none_or(|(fb_best, _)| fm.abs() < fb_best.abs());
        if better {
            best = Some((fm, c));
        }
        if fm == 0.0 {
            converged = true;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
            pa = pm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            pb = pm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        // Regula falsi stalls on one side near double roots; alternate with bisection.
        if (b - a) > 0.5 * h1 {
            force_bisect = true;
        }
    }
    match best {
        Some((_, c)) => (c.p, rs.reduction.lift(&c.y), converged),
        None => (next.parameter, next.state.clone(), false),
    }
}

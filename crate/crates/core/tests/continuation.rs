//! Corrector, trace and branch-switching behaviour on the reference problems.

use cluster_bifurc_core::continuation::{
    branch_switch, make_point, newton_correct, trace_branch, ContinuationSettings, EventKind, ParameterMode,
    StopReason, TraceOutput, TraceRequest,
};
use cluster_bifurc_core::symmetry::{ReducedSystem, Reduction};
use cluster_bifurc_core::{Error, KktSystem, PotentialSpec, Shape, TetraSystem, TriangleSystem};

fn lj() -> PotentialSpec {
    PotentialSpec::lennard_jones(1.0, 2.0, 12.0, 6.0).unwrap()
}

fn trace_symmetric(sys: &dyn KktSystem, lo: f64, hi: f64) -> TraceOutput {
    let red = Reduction::new(sys.group().clone()).unwrap();
    let rs = ReducedSystem::new(sys, &red);
    let n = sys.dim();
    let mut up = vec![0.0; n + 1];
    up[n] = 1.0;
    let start = make_point(sys, sys.trivial(lo).unwrap(), lo, 0.0, up.clone()).unwrap();
    let request = TraceRequest {
        branch_id: 0,
        window: (lo, hi),
        direction: &up,
        bifurcation_kind: EventKind::Primary,
        mirror: None,
    };
    trace_branch(&rs, &start, &request, &ContinuationSettings::default()).unwrap()
}

#[test]
fn newton_recovers_the_symmetric_state() {
    let sys = TriangleSystem::new(lj());
    let red = Reduction::full(4);
    let rs = ReducedSystem::new(&sys, &red);
    let exact = sys.trivial(0.5).unwrap();
    let guess: Vec<f64> = exact.iter().zip([0.3, 0.02, -0.01, 0.015]).map(|(x, d)| x + d).collect();
    let c = newton_correct(&rs, &red.restrict(&guess), 0.5, ParameterMode::Fixed, &ContinuationSettings::default())
        .unwrap();
    assert_eq!(c.p, 0.5);
    let x = red.lift(&c.y);
    assert!(x.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-9), "{x:?} vs {exact:?}");
    assert!(c.residual < 1e-10);
}

#[test]
fn newton_reports_degenerate_starts() {
    let sys = TriangleSystem::new(lj());
    let red = Reduction::full(4);
    let rs = ReducedSystem::new(&sys, &red);
    let bad = [0.0, 1.0, -1.0, 1.0];
    let r = newton_correct(&rs, &bad, 0.5, ParameterMode::Fixed, &ContinuationSettings::default());
    assert!(matches!(r, Err(Error::DomainExit)), "{r:?}");
}

#[test]
fn symmetric_triangle_branch_has_one_double_crossing() {
    let sys = TriangleSystem::new(lj());
    let out = trace_symmetric(&sys, 0.3, 0.9);
    assert_eq!(out.stop, StopReason::WindowExit);
    assert_eq!(out.points.last().unwrap().parameter, 0.9);
    assert_eq!(out.events.len(), 1, "{:?}", out.events);
    let e = &out.events[0];
    assert_eq!(e.kind, EventKind::Primary);
    assert_eq!(e.kernel_dim, 2);
    assert!((e.parameter - 0.587689).abs() < 1e-6, "{}", e.parameter);
    assert!(out.points.iter().all(|p| p.shape == Shape::Equilateral));
    // Stable below the threshold, unstable above.
    assert!(out.points.first().unwrap().stability.is_stable());
    assert!(!out.points.last().unwrap().stability.is_stable());
}

#[test]
fn hooke_tetrahedron_never_loses_stability() {
    let sys = TetraSystem::new(PotentialSpec::spring(1.0, 0.0).unwrap());
    let out = trace_symmetric(&sys, 0.1, 50.0);
    assert_eq!(out.stop, StopReason::WindowExit);
    assert!(out.events.is_empty(), "{:?}", out.events);
    assert!(out.points.iter().all(|p| p.stability.is_stable()));
}

#[test]
fn soft_spring_tetrahedron_kernel_dimensions() {
    let spec = PotentialSpec::spring(1.0, -0.1).unwrap();
    let sys = TetraSystem::new(spec);
    let out = trace_symmetric(&sys, 1.0, 3.0);
    let found: Vec<(usize, f64)> = out.events.iter().map(|e| (e.kernel_dim, e.parameter)).collect();
    assert_eq!(found.len(), 2, "{found:?}");
    assert_eq!(found[0].0, 3);
    assert!((found[0].1 - 2.028602).abs() < 1e-5, "{found:?}");
    assert_eq!(found[1].0, 2);
    assert!((found[1].1 - 2.666667).abs() < 1e-5, "{found:?}");
    let closed = spec.closed_form_thresholds(cluster_bifurc_core::Problem::Tetrahedron);
    assert!((closed[0].value - found[0].1).abs() < 1e-6 * closed[0].value);
    assert!((closed[1].value - found[1].1).abs() < 1e-6 * closed[1].value);
}

#[test]
fn switching_onto_the_isosceles_branch() {
    let sys = TriangleSystem::new(lj());
    let event = trace_symmetric(&sys, 0.3, 0.9).events.remove(0);
    let v = [0.0, -2.0, 1.0, 1.0];
    let red = Reduction::from_vector(sys.group(), &v).unwrap();
    assert_eq!(red.fixed_dim, 3);
    let settings = ContinuationSettings::default();
    let outcome = branch_switch(&sys, &event, &v, &red, &settings).unwrap();
    assert!(!outcome.seeds.is_empty());
    assert!(outcome.data.b0.abs() > 1e-8, "transversal crossing");
    for seed in &outcome.seeds {
        assert_eq!(seed.shape, Shape::IsoscelesBc);
        assert!(sys.residual(&seed.state, seed.parameter).unwrap().iter().all(|r| r.abs() < 1e-9));
    }

    // Follow every seed and collect the events on the isosceles branch.
    let rs = ReducedSystem::new(&sys, &red);
    let mut events = Vec::new();
    for seed in &outcome.seeds {
        let request = TraceRequest {
            branch_id: 1,
            window: (0.3, 0.9),
            direction: &seed.tangent,
            bifurcation_kind: EventKind::Secondary,
            mirror: outcome.mirror.as_ref(),
        };
        let out = trace_branch(&rs, seed, &request, &settings).unwrap();
        assert!(out.points.iter().all(|p| p.state[2] == p.state[3] || (p.state[2] - p.state[3]).abs() < 1e-12));
        events.extend(out.events);
    }
    let turning: Vec<f64> = events.iter().filter(|e| e.kind == EventKind::Turning).map(|e| e.parameter).collect();
    assert!(turning.iter().any(|p| (p - 0.585663).abs() < 1e-5), "{turning:?}");
    let secondary: Vec<f64> = events.iter().filter(|e| e.kind == EventKind::Secondary).map(|e| e.parameter).collect();
    for expected in [0.625072, 0.667039] {
        assert!(secondary.iter().any(|p| (p - expected).abs() < 1e-5), "{secondary:?}");
    }
}

//! Self-checks run by `cluster-bifurc verify`.

use cluster_bifurc_core::linalg::DenseMatrix;
use cluster_bifurc_core::symmetry::{fixed_projection, isotropy, tetra_group, vertex_to_edge_map};
use cluster_bifurc_core::tetrahedron::{cayley_menger, sum_zero_basis, trivial_spectrum4};
use cluster_bifurc_core::triangle::trivial_spectrum3;
use cluster_bifurc_core::{KktSystem, PotentialSpec, Problem};

use crate::pipeline::system_for;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= tol,
            detail: format!("{value:.3e} (tolerance {tol:.0e})"),
        }
    }
}

/// Off-branch sample states, multiplier first.
fn samples(problem: Problem) -> Vec<(Vec<f64>, f64)> {
    match problem {
        Problem::Triangle => vec![
            (vec![-1.3, 1.1, 1.25, 0.95], 0.55),
            (vec![0.4, 1.6, 1.2, 1.5], 0.8),
        ],
        Problem::Tetrahedron => vec![
            (vec![-0.7, 1.1, 1.2, 1.05, 0.95, 1.15, 1.0], 0.15),
            (vec![0.3, 1.4, 1.3, 1.25, 1.35, 1.2, 1.45], 0.3),
        ],
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest relative deviation of the central-difference Jacobian of the
/// residual from the analytic one.
fn jacobian_fd_error(sys: &dyn KktSystem, x: &[f64], p: f64) -> f64 {
    let Ok(j) = sys.jacobian(x) else {
        return f64::INFINITY;
    };
    let n = x.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let h = 1e-6 * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let (Ok(fp), Ok(fm)) = (sys.residual(&xp, p), sys.residual(&xm, p)) else {
            return f64::INFINITY;
        };
        for i in 0..n {
            worst = worst.max(rel_err((fp[i] - fm[i]) / (2.0 * h), j[(i, k)]));
        }
    }
    worst
}

fn equivariance_error(sys: &dyn KktSystem, x: &[f64], p: f64) -> f64 {
    let Ok(f) = sys.residual(x, p) else {
        return f64::INFINITY;
    };
    let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    sys.group()
        .elements()
        .iter()
        .map(|g| match sys.residual(&g.apply(x), p) {
            Ok(fg) => {
                let gf = g.apply(&f);
                fg.iter().zip(&gf).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
            }
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

fn potential_fd_error(spec: &PotentialSpec) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let r = 0.5 + 9.5 * f64::from(i) / 19.0;
        let h = 1e-5 * r;
        let val = |order: u8, x: f64| spec.eval_order(x, order).unwrap_or(f64::NAN);
        for order in [1u8, 2] {
            let fd = (val(order - 1, r + h) - val(order - 1, r - h)) / (2.0 * h);
            let exact = val(order, r);
            let scale = exact.abs().max(val(order - 1, r).abs() / r).max(1e-300);
            worst = worst.max((fd - exact).abs() / scale);
        }
    }
    worst
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn spectrum_error(numeric: &[f64], closed: &[f64]) -> f64 {
    let scale = closed.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    sorted(numeric.to_vec())
        .iter()
        .zip(sorted(closed.to_vec()))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale))
}

fn trivial_spectrum_error(sys: &dyn KktSystem, p: f64) -> f64 {
    let spec = sys.potential();
    let Ok(x) = sys.trivial(p) else {
        return f64::INFINITY;
    };
    match sys.problem() {
        Problem::Triangle => {
            let (Ok(s), Ok(j)) = (trivial_spectrum3(spec, p), sys.jacobian(&x)) else {
                return f64::INFINITY;
            };
            let Ok(e) = j.sym_eigen() else {
                return f64::INFINITY;
            };
            spectrum_error(&e.values, &[s.mu, s.mu, s.simple_pair[0], s.simple_pair[1]])
        }
        Problem::Tetrahedron => {
            let Ok(s) = trivial_spectrum4(spec, p) else {
                return f64::INFINITY;
            };
            let reduced: DenseMatrix = sys.lagrangian_hessian(&x).congruence(&sum_zero_basis());
            let Ok(e) = reduced.sym_eigen() else {
                return f64::INFINITY;
            };
            spectrum_error(&e.values, &s.u_eigs)
        }
    }
}

fn cm_invariance_error() -> f64 {
    let edges = [1.1, 1.25, 0.95, 1.3, 1.05, 1.2];
    let base = cayley_menger(&edges);
    let mut worst: f64 = 0.0;
    let mut sigma = [0usize, 1, 2, 3];
    // All 24 orderings via Heap's algorithm.
    let mut c = [0usize; 4];
    let mut check = |s: &[usize; 4]| {
        let map = vertex_to_edge_map(*s);
        let permuted: [f64; 6] = std::array::from_fn(|i| edges[map[i]]);
        worst = worst.max(rel_err(cayley_menger(&permuted), base));
    };
    check(&sigma);
    let mut i = 1;
    while i < 4 {
        if c[i] < i {
            if i % 2 == 0 {
                sigma.swap(0, i);
            } else {
                sigma.swap(c[i], i);
            }
            check(&sigma);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    worst
}

/// Checks of the projection onto the fixed space of each kernel isotropy group.
fn projection_checks() -> Vec<Check> {
    let g = tetra_group();
    crate::pipeline::symmetric_kernel_vectors(Problem::Tetrahedron)
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let h = isotropy(&g, &v);
            let ok = fixed_projection(&h).map(|p| p.is_symmetric() && p.is_idempotent());
            Check {
                name: format!("projection {k}: symmetric and idempotent (|H| = {})", h.order()),
                passed: matches!(ok, Ok(true)),
                detail: format!("{ok:?}"),
            }
        })
        .collect()
}

/// Runs every self-check for `potential`.
pub fn run_checks(potential: PotentialSpec) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::new(
        format!("{} potential derivatives vs finite differences", potential.family()),
        potential_fd_error(&potential),
        1e-6,
    ));
    for problem in [Problem::Triangle, Problem::Tetrahedron] {
        let sys = system_for(problem, potential);
        for (i, (x, p)) in samples(problem).into_iter().enumerate() {
            out.push(Check::new(
                format!("{} sample {i}: Jacobian vs finite differences", problem.as_str()),
                jacobian_fd_error(sys.as_ref(), &x, p),
                1e-6,
            ));
            out.push(Check::new(
                format!("{} sample {i}: equivariance over {} elements", problem.as_str(), sys.group().order()),
                equivariance_error(sys.as_ref(), &x, p),
                1e-12,
            ));
        }
        let p = samples(problem)[0].1;
        out.push(Check::new(
            format!("{} trivial spectrum vs closed form", problem.as_str()),
            trivial_spectrum_error(sys.as_ref(), p),
            1e-9,
        ));
    }
    out.push(Check::new("Cayley-Menger invariance under 24 vertex permutations", cm_invariance_error(), 1e-12));
    out.push(Check::new(
        "Cayley-Menger determinant of the unit tetrahedron is 4",
        (cayley_menger(&[1.0; 6]) - 4.0).abs(),
        1e-12,
    ));
    out.extend(projection_checks());
    out
}

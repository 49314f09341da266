//! Closed-form spectra of the symmetric states, kernel eigenvectors and the
//! exact fixed-space projections.

use cluster_bifurc_core::symmetry::{fixed_projection, isotropy, tetra_group, triangle_group, RationalMatrix};
use cluster_bifurc_core::tetrahedron::{jacobian4, regular_edge, sum_zero_basis, trivial4, trivial_spectrum4};
use cluster_bifurc_core::triangle::{trivial3, trivial_spectrum3};
use cluster_bifurc_core::{KktSystem, PotentialSpec, TetraSystem, TriangleSystem};

const SPECTRUM_TOL: f64 = 1e-9;

fn potentials() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::lennard_jones(1.0, 2.0, 12.0, 6.0).unwrap(),
        PotentialSpec::buckingham(1.0, 1.0, 1.0, 4.0).unwrap(),
        PotentialSpec::spring(1.0, -0.1).unwrap(),
        PotentialSpec::spring(2.0, 0.3).unwrap(),
    ]
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn max_rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
}

#[test]
fn triangle_trivial_spectrum() {
    for spec in potentials() {
        let sys = TriangleSystem::new(spec);
        for area in [0.3, 0.5877, 0.9, 5.0, 40.0] {
            let x = sys.trivial(area).unwrap();
            assert!(sys.residual(&x, area).unwrap().iter().all(|r| r.abs() < 1e-11 * area.max(1.0) * area.max(1.0)));
            let s = trivial_spectrum3(&spec, area).unwrap();
            let closed = sorted(vec![s.mu, s.mu, s.simple_pair[0], s.simple_pair[1]]);
            let numeric = sys.jacobian(&x).unwrap().sym_eigen().unwrap().values;
            let gap = max_rel_gap(&numeric, &closed);
            assert!(gap < SPECTRUM_TOL, "{spec:?} A={area}: {numeric:?} vs {closed:?}");
        }
    }
}

#[test]
fn tetra_trivial_spectrum() {
    for spec in potentials() {
        let sys = TetraSystem::new(spec);
        for volume in [0.1, 0.186339, 0.3, 2.0] {
            let x = sys.trivial(volume).unwrap();
            let s = trivial_spectrum4(&spec, volume).unwrap();
            let a = regular_edge(volume);
            let disc = (16.0 * s.alpha * s.alpha + 9.0 * (s.alpha - 2.0 * s.beta).powi(2)).sqrt();
            let printed = sorted(vec![
                s.alpha,
                s.alpha,
                s.alpha - 2.0 * s.beta,
                0.5 * (7.0 * s.alpha - 6.0 * s.beta - disc),
                0.5 * (7.0 * s.alpha - 6.0 * s.beta + disc),
            ]);
            assert_eq!(printed, s.u_eigs.to_vec());
            let reduced = sys.lagrangian_hessian(&x).congruence(&sum_zero_basis());
            let numeric = reduced.sym_eigen().unwrap().values;
            let gap = max_rel_gap(&numeric, &printed);
            assert!(gap < SPECTRUM_TOL, "{spec:?} V={volume} a={a}: {numeric:?} vs {printed:?}");
        }
    }
}

fn eigen_gap(m: &cluster_bifurc_core::linalg::DenseMatrix, v: &[f64], mu: f64) -> f64 {
    let mv = m.mul_vec(v);
    let scale = m.max_abs().max(1.0);
    mv.iter().zip(v).fold(0.0f64, |acc, (x, y)| acc.max((x - mu * y).abs() / scale))
}

#[test]
fn tetra_kernel_eigenvectors() {
    for spec in potentials() {
        for volume in [0.15, 0.25, 1.0] {
            let state = trivial4(&spec, volume).unwrap();
            let j = jacobian4(&spec, &state).unwrap();
            let s = trivial_spectrum4(&spec, volume).unwrap();
            let v1 = [0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0];
            let v2 = [0.0, -1.0, 1.0, 0.0, -1.0, 1.0, 0.0];
            assert!(eigen_gap(&j, &v1, s.mu1) < 1e-12, "{spec:?} V={volume} mu1");
            assert!(eigen_gap(&j, &v2, s.mu2) < 1e-12, "{spec:?} V={volume} mu2");
        }
    }
}

#[test]
fn triangle_kernel_eigenvector() {
    for spec in potentials() {
        let state = trivial3(&spec, 0.6).unwrap();
        let sys = TriangleSystem::new(spec);
        let j = sys.jacobian(&state.to_vec()).unwrap();
        let s = trivial_spectrum3(&spec, 0.6).unwrap();
        assert!(eigen_gap(&j, &[0.0, -2.0, 1.0, 1.0], s.mu) < 1e-12);
        assert!(eigen_gap(&j, &[0.0, 0.0, 1.0, -1.0], s.mu) < 1e-12);
    }
}

/// Entries written as `(numerator, denominator)` in lowest terms.
fn assert_printed(p: &RationalMatrix, printed: &[&[(u32, u32)]]) {
    assert_eq!(p.dim(), printed.len());
    for (i, row) in printed.iter().enumerate() {
        for (j, &(num, den)) in row.iter().enumerate() {
            let expected = if num == 0 { (0, 1) } else { (num, den) };
            assert_eq!(p.entry(i, j), expected, "entry ({i}, {j})");
        }
    }
    assert!(p.is_symmetric() && p.is_idempotent());
}

const Z: (u32, u32) = (0, 1);
const I: (u32, u32) = (1, 1);
const H: (u32, u32) = (1, 2);
const T: (u32, u32) = (1, 3);
const Q: (u32, u32) = (1, 4);

#[test]
fn triangle_projection_matches_printed_matrix() {
    let h = isotropy(&triangle_group(), &[0.0, -2.0, 1.0, 1.0]);
    assert_printed(
        &fixed_projection(&h).unwrap(),
        &[&[I, Z, Z, Z], &[Z, I, Z, Z], &[Z, Z, H, H], &[Z, Z, H, H]],
    );
}

#[test]
fn tetra_projections_match_printed_matrices() {
    let g = tetra_group();
    let h = isotropy(&g, &[0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0]);
    assert_printed(
        &fixed_projection(&h).unwrap(),
        &[
            &[I, Z, Z, Z, Z, Z, Z],
            &[Z, Q, Q, Z, Q, Q, Z],
            &[Z, Q, Q, Z, Q, Q, Z],
            &[Z, Z, Z, I, Z, Z, Z],
            &[Z, Q, Q, Z, Q, Q, Z],
            &[Z, Q, Q, Z, Q, Q, Z],
            &[Z, Z, Z, Z, Z, Z, I],
        ],
    );

    let h = isotropy(&g, &[0.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);
    assert_eq!(h.order(), 6);
    assert_printed(
        &fixed_projection(&h).unwrap(),
        &[
            &[I, Z, Z, Z, Z, Z, Z],
            &[Z, T, T, T, Z, Z, Z],
            &[Z, T, T, T, Z, Z, Z],
            &[Z, T, T, T, Z, Z, Z],
            &[Z, Z, Z, Z, T, T, T],
            &[Z, Z, Z, Z, T, T, T],
            &[Z, Z, Z, Z, T, T, T],
        ],
    );

    let h = isotropy(&g, &[0.0, -2.0, 1.0, 1.0, -2.0, 1.0, 1.0]);
    assert_printed(
        &fixed_projection(&h).unwrap(),
        &[
            &[I, Z, Z, Z, Z, Z, Z],
            &[Z, H, Z, Z, H, Z, Z],
            &[Z, Z, Q, Q, Z, Q, Q],
            &[Z, Z, Q, Q, Z, Q, Q],
            &[Z, H, Z, Z, H, Z, Z],
            &[Z, Z, Q, Q, Z, Q, Q],
            &[Z, Z, Q, Q, Z, Q, Q],
        ],
    );
}

#[test]
fn kernel_isotropy_makes_the_critical_eigenvalue_simple() {
    // In each fixed space the vanishing eigenvalue should appear exactly once.
    let spec = PotentialSpec::spring(1.0, -0.1).unwrap();
    let sys = TetraSystem::new(spec);
    let v_mu1 = spec.closed_form_thresholds(cluster_bifurc_core::Problem::Tetrahedron)[0].value;
    let x = sys.trivial(v_mu1).unwrap();
    let g = tetra_group();
    for v in [[0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0], [0.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0]] {
        let r = cluster_bifurc_core::symmetry::Reduction::from_vector(&g, &v).unwrap();
        let reduced = sys.jacobian(&x).unwrap().congruence(&r.basis);
        let eig = reduced.sym_eigen().unwrap();
        let tol = 1e-7 * reduced.max_abs();
        assert_eq!(eig.values.iter().filter(|e| e.abs() < tol).count(), 1, "{:?}", eig.values);
    }
}

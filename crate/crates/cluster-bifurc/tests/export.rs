//! JSON and CSV round trips.

use cluster_bifurc::export::{csv_header, from_json, to_csv, to_json};
use cluster_bifurc::pipeline::{run_diagram, PipelineOptions};
use cluster_bifurc_core::continuation::{
    BifurcationEvent, Branch, BranchKind, BranchPoint, ContinuationSettings, EventKind,
};
use cluster_bifurc_core::diagram::Diagram;
use cluster_bifurc_core::system::shape_of;
use cluster_bifurc_core::{PotentialSpec, Problem, Stability};
use proptest::prelude::*;

fn small_diagram() -> Diagram {
    let options = PipelineOptions {
        window: (0.55, 0.7),
        settings: ContinuationSettings::default(),
        deep: false,
        threads: 1,
    };
    run_diagram(Problem::Triangle, PotentialSpec::lennard_jones(1.0, 2.0, 12.0, 6.0).unwrap(), &options).unwrap()
}

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes())
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn pipeline_diagram_round_trips_through_json() {
    let d = small_diagram();
    let back = from_json(&to_json(&d).unwrap()).unwrap();
    assert_eq!(back, d);
}

#[test]
fn csv_has_one_row_per_point_plus_header() {
    let d = small_diagram();
    let text = to_csv(&d).unwrap();
    let records = rows(&text);
    let points: usize = d.branches.iter().map(|b| b.points.len()).sum();
    assert_eq!(records.len(), points + 1);
    assert_eq!(
        records[0].iter().collect::<Vec<_>>(),
        ["branch_id", "s", "parameter", "lambda", "a", "b", "c", "stable", "shape"]
    );
    // Values parse back exactly.
    let first = &d.branches[0].points[0];
    let r = &records[1];
    assert_eq!(r[2].parse::<f64>().unwrap(), first.parameter);
    assert_eq!(r[3].parse::<f64>().unwrap(), first.state[0]);
    assert_eq!(&r[8], first.shape.as_str());
}

#[test]
fn tetra_header_names_all_six_edges() {
    let d = Diagram::new(
        Problem::Tetrahedron,
        PotentialSpec::spring(1.0, 0.0).unwrap(),
        [0.1, 1.0],
        ContinuationSettings::default(),
    );
    assert_eq!(
        csv_header(&d),
        ["branch_id", "s", "parameter", "lambda", "a", "b", "c", "A", "B", "C", "stable", "shape"]
    );
    assert_eq!(rows(&to_csv(&d).unwrap()).len(), 1);
}

#[test]
fn dangling_event_reference_is_rejected() {
    let mut d = small_diagram();
    d.events[0].source_branch = 999;
    let err = from_json(&to_json(&d).unwrap()).unwrap_err();
    assert!(err.to_string().contains("999"), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(from_json("{").is_err());
}

fn point_strategy() -> impl Strategy<Value = BranchPoint> {
    (
        -5.0f64..5.0,
        prop::array::uniform3(0.5f64..2.0),
        0.1f64..1.0,
        0.0f64..10.0,
        prop::sample::select(vec![Stability::Stable, Stability::Unstable, Stability::Marginal]),
        prop::collection::vec(-1.0f64..1.0, 5),
    )
        .prop_map(|(lambda, edges, parameter, arclength, stability, tangent)| {
            let state = vec![lambda, edges[0], edges[1], edges[2]];
            BranchPoint {
                shape: shape_of(&state),
                state,
                parameter,
                arclength,
                stability,
                det_sign: if stability == Stability::Stable { 1 } else { -1 },
                negative_count: 2,
                energy: -lambda,
                tangent,
            }
        })
}

fn diagram_strategy() -> impl Strategy<Value = Diagram> {
    prop::collection::vec(prop::collection::vec(point_strategy(), 1..6), 1..4).prop_map(|branches| {
        let mut d = Diagram::new(
            Problem::Triangle,
            PotentialSpec::lennard_jones(1.0, 2.0, 12.0, 6.0).unwrap(),
            [0.1, 1.0],
            ContinuationSettings::default(),
        );
        for (id, mut points) in branches.into_iter().enumerate() {
            points.sort_by(|a, b| a.arclength.total_cmp(&b.arclength));
            let mut b = Branch::new(id, if id == 0 { BranchKind::Trivial } else { BranchKind::Primary }, points);
            if id > 0 {
                b.parent_event = Some(0);
                b.generator = Some(vec![1, 0, 2]);
                b.isotropy_order = 2;
            }
            d.branches.push(b);
        }
        let p = &d.branches[0].points[0];
        d.events.push(BifurcationEvent {
            id: 0,
            kind: EventKind::Primary,
            parameter: p.parameter,
            kernel_dim: 2,
            kernel_basis: vec![vec![0.0, -0.8, 0.4, 0.4], vec![0.0, 0.0, 0.7, -0.7]],
            source_branch: 0,
            state: p.state.clone(),
            tangent: p.tangent.clone(),
            residual_eigenvalue: 1e-13,
            reduced_precision: false,
            note: Some("a \"quoted\", note".into()),
        });
        d
    })
}

proptest! {
    #[test]
    fn random_diagrams_round_trip(d in diagram_strategy()) {
        let back = from_json(&to_json(&d).unwrap()).unwrap();
        prop_assert_eq!(&back, &d);
        let points: usize = d.branches.iter().map(|b| b.points.len()).sum();
        prop_assert_eq!(rows(&to_csv(&d).unwrap()).len(), points + 1);
    }
}

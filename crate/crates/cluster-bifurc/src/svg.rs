//! SVG rendering of diagram projections.

use std::fmt::Write as _;

use cluster_bifurc_core::continuation::{BifurcationEvent, Branch, BranchPoint};
use cluster_bifurc_core::diagram::Diagram;
use cluster_bifurc_core::linalg::{axpy, norm2};
use cluster_bifurc_core::symmetry::Perm;
use cluster_bifurc_core::Stability;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::pipeline::system_for;

pub const STABLE_COLOR: &str = "#008000";
pub const UNSTABLE_COLOR: &str = "#c00000";

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;

/// Azimuth and elevation (degrees) looking down the diagonal `a = b = c`.
pub const TRIVIAL_AXIS_VIEW: (f64, f64) = (45.0, 35.264_389_682_754_654);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "projection", rename_all = "snake_case", deny_unknown_fields)]
pub enum Projection {
    /// A state component (`lambda`, an edge name or `energy`) against the parameter.
    ParamVsComponent { component: String },
    /// Orthographic view of the first three edges.
    #[serde(rename = "abc_3d")]
    Abc3d {
        #[serde(default = "default_azimuth")]
        azimuth: f64,
        #[serde(default = "default_elevation")]
        elevation: f64,
    },
}

fn default_azimuth() -> f64 {
    30.0
}

fn default_elevation() -> f64 {
    20.0
}

impl Projection {
    /// The `abc` view with the symmetric branch pointing out of the page.
    pub fn trivial_axis() -> Self {
        Projection::Abc3d {
            azimuth: TRIVIAL_AXIS_VIEW.0,
            elevation: TRIVIAL_AXIS_VIEW.1,
        }
    }

    /// File-name suffix.
    pub fn slug(&self) -> String {
        match self {
            Projection::ParamVsComponent { component } => {
                let safe: String = component
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                    .collect();
                // Edge names differ only by case in the tetrahedron.
                if safe.chars().any(|c| c.is_ascii_uppercase()) {
                    format!("{}_upper", safe.to_ascii_lowercase())
                } else {
                    safe
                }
            }
            Projection::Abc3d { azimuth, elevation } => format!("abc_{azimuth:.0}_{elevation:.0}"),
        }
    }
}

/// Maps a state and parameter to plane coordinates.
enum Mapper {
    Component { index: Option<usize> },
    View { right: [f64; 3], up: [f64; 3] },
}

impl Mapper {
    fn new(diagram: &Diagram, projection: &Projection) -> AppResult<Self> {
        match projection {
            Projection::ParamVsComponent { component } => {
                let names = diagram.problem.edge_names();
                let index = match component.as_str() {
                    "lambda" => Some(0),
                    "energy" => None,
                    name => match names.iter().position(|n| *n == name) {
                        Some(i) => Some(i + 1),
                        None => {
                            return Err(AppError::Config(format!(
                                "unknown component `{component}`; expected lambda, energy or one of {}",
                                names.join(", ")
                            )))
                        }
                    },
                };
                Ok(Mapper::Component { index })
            }
            Projection::Abc3d { azimuth, elevation } => {
                if !(azimuth.is_finite() && elevation.is_finite()) {
                    return Err(AppError::Config("abc_3d view angles must be finite".into()));
                }
                let (az, el) = (azimuth.to_radians(), elevation.to_radians());
                Ok(Mapper::View {
                    right: [-az.sin(), az.cos(), 0.0],
                    up: [-el.sin() * az.cos(), -el.sin() * az.sin(), el.cos()],
                })
            }
        }
    }

    fn map(&self, state: &[f64], parameter: f64, energy: f64) -> (f64, f64) {
        match self {
            Mapper::Component { index: Some(i) } => (parameter, state[*i]),
            Mapper::Component { index: None } => (parameter, energy),
            Mapper::View { right, up } => {
                let e = &state[1..4];
                let dot = |v: &[f64; 3]| v[0] * e[0] + v[1] * e[1] + v[2] * e[2];
                (dot(right), dot(up))
            }
        }
    }

    fn point(&self, p: &BranchPoint) -> (f64, f64) {
        self.map(&p.state, p.parameter, p.energy)
    }
}

/// Events lying on `branch`, carried to it by the orbit generator for copies.
fn events_on(diagram: &Diagram, branch: &Branch) -> Vec<(f64, Vec<f64>)> {
    let source = branch.orbit_of.unwrap_or(branch.id);
    let generator = branch
        .generator
        .as_ref()
        .and_then(|g| Perm::lift_edges(g).ok());
    diagram
        .events
        .iter()
        .filter(|e| e.source_branch == source)
        .map(|e| {
            let state = match &generator {
                Some(g) => g.apply(&e.state),
                None => e.state.clone(),
            };
            (e.parameter, state)
        })
        .collect()
}

/// A run of constant stability: `(stable, plane points)`.
type Run = (bool, Vec<(f64, f64)>);

/// Polylines of constant stability. A colour change is placed at the event
/// recorded between the two points, or halfway when there is none.
fn segments(diagram: &Diagram, branch: &Branch, mapper: &Mapper, energy: &dyn Fn(&[f64]) -> f64) -> Vec<Run> {
    let events = events_on(diagram, branch);
    let mut out: Vec<Run> = Vec::new();
    // Marginal points sit on a boundary and take the colour of the run they end.
    let first_definite = branch
        .points
        .iter()
        .find(|p| p.stability != Stability::Marginal)
        .is_none_or(|p| p.stability.is_stable());
    for (i, p) in branch.points.iter().enumerate() {
        let xy = mapper.point(p);
        let stable = match (p.stability, out.last()) {
            (Stability::Marginal, Some((s, _))) => *s,
            (Stability::Marginal, None) => first_definite,
            (s, _) => s.is_stable(),
        };
        match out.last_mut() {
            None => out.push((stable, vec![xy])),
            Some((s, pts)) if *s == stable => pts.push(xy),
            Some((_, pts)) => {
                let q = &branch.points[i - 1];
                let (lo, hi) = (q.parameter.min(p.parameter), q.parameter.max(p.parameter));
                let split = events
                    .iter()
                    .filter(|(ep, _)| *ep >= lo && *ep <= hi)
                    .min_by(|a, b| {
                        let da = distance(&a.1, &q.state);
                        let db = distance(&b.1, &q.state);
                        da.total_cmp(&db)
                    })
                    .map(|(ep, st)| mapper.map(st, *ep, energy(st)))
                    .unwrap_or_else(|| {
                        let a = mapper.point(q);
                        (0.5 * (a.0 + xy.0), 0.5 * (a.1 + xy.1))
                    });
                pts.push(split);
                out.push((stable, vec![split, xy]));
            }
        }
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    norm2(&axpy(-1.0, a, b))
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(x: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let x = if x.abs() < 1e-9 * step { 0.0 } else { x };
    format!("{x:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn event_label(e: &BifurcationEvent, param: &str) -> String {
    format!("{} event {} at {param} = {:.6}", e.kind.as_str(), e.id, e.parameter)
}

/// Renders one projection of `diagram`.
pub fn render_svg(diagram: &Diagram, projection: &Projection) -> AppResult<String> {
    let mapper = Mapper::new(diagram, projection)?;
    let system = system_for(diagram.problem, diagram.potential);
    let energy = |x: &[f64]| system.energy(x);
    let branches: Vec<(&Branch, Vec<Run>)> = diagram
        .branches
        .iter()
        .filter(|b| !b.points.is_empty())
        .map(|b| (b, segments(diagram, b, &mapper, &energy)))
        .collect();
    let all: Vec<(f64, f64)> = branches
        .iter()
        .flat_map(|(_, segs)| segs.iter().flat_map(|(_, pts)| pts.iter().copied()))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if all.is_empty() {
        return Err(AppError::Config("projection is empty: the diagram has no branch points".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    for (lo, hi) in [(&mut x0, &mut x1), (&mut y0, &mut y1)] {
        let pad = 0.05 * (*hi - *lo).max(1e-9 * hi.abs().max(1.0));
        *lo -= pad;
        *hi += pad;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let param = match diagram.problem {
        cluster_bifurc_core::Problem::Triangle => "A",
        cluster_bifurc_core::Problem::Tetrahedron => "V",
    };
    let (xlabel, ylabel, title) = match projection {
        Projection::ParamVsComponent { component } => (
            param.to_string(),
            component.clone(),
            format!("{} ({}): {component} vs {param}", diagram.problem.as_str(), diagram.potential.family()),
        ),
        Projection::Abc3d { azimuth, elevation } => (
            String::new(),
            String::new(),
            format!(
                "{} ({}): abc view, azimuth {azimuth:.1}, elevation {elevation:.1}",
                diagram.problem.as_str(),
                diagram.potential.family()
            ),
        ),
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );

    match &mapper {
        Mapper::Component { .. } => {
            let _ = writeln!(s, r#"<g class="axes" stroke="black">"#);
            let step = nice_step(x1 - x0);
            let mut t = (x0 / step).ceil() * step;
            while t <= x1 {
                let x = sx(t);
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{0:.2}" x2="{x:.2}" y2="{1:.2}"/>"#, HEIGHT - MARGIN, HEIGHT - MARGIN + 5.0);
                let _ = writeln!(
                    s,
                    r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{}</text>"#,
                    HEIGHT - MARGIN + 18.0,
                    fmt_tick(t, step)
                );
                t += step;
            }
            let step = nice_step(y1 - y0);
            let mut t = (y0 / step).ceil() * step;
            while t <= y1 {
                let y = sy(t);
                let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}"/>"#, MARGIN - 5.0);
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{}</text>"#,
                    MARGIN - 8.0,
                    y + 4.0,
                    fmt_tick(t, step)
                );
                t += step;
            }
            let _ = writeln!(s, "</g>");
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                WIDTH / 2.0,
                HEIGHT - 20.0,
                escape(&xlabel)
            );
            let _ = writeln!(
                s,
                r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
                HEIGHT / 2.0,
                escape(&ylabel)
            );
        }
        Mapper::View { right, up } => {
            // Edge-axis tripod in the lower left corner.
            let (cx, cy) = (MARGIN + 40.0, HEIGHT - MARGIN - 40.0);
            let _ = writeln!(s, r#"<g class="axes" stroke="black">"#);
            for (k, name) in ["a", "b", "c"].iter().enumerate() {
                let (dx, dy) = (30.0 * right[k], -30.0 * up[k]);
                let _ = writeln!(s, r#"<line x1="{cx}" y1="{cy}" x2="{:.2}" y2="{:.2}"/>"#, cx + dx, cy + dy);
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" stroke="none">{name}</text>"#,
                    cx + 1.3 * dx,
                    cy + 1.3 * dy + 4.0
                );
            }
            let _ = writeln!(s, "</g>");
        }
    }

    for (b, segs) in &branches {
        let _ = writeln!(s, r#"<g class="branch" id="branch-{}" fill="none" stroke-width="1.5">"#, b.id);
        for (stable, pts) in segs {
            let color = if *stable { STABLE_COLOR } else { UNSTABLE_COLOR };
            let mut path = String::new();
            for (x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                let _ = write!(path, "{:.2},{:.2} ", sx(*x), sy(*y));
            }
            let _ = writeln!(s, r#"<polyline stroke="{color}" points="{}"/>"#, path.trim_end());
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="events" fill="none" stroke="black">"#);
    for e in &diagram.events {
        let (x, y) = mapper.map(&e.state, e.parameter, energy(&e.state));
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4"><title>{}</title></circle>"#,
            sx(x),
            sy(y),
            escape(&event_label(e, param))
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<g class="legend"><line x1="{0}" y1="{3}" x2="{1}" y2="{3}" stroke="{STABLE_COLOR}" stroke-width="2"/><text x="{2}" y="{4}">stable</text><line x1="{0}" y1="{5}" x2="{1}" y2="{5}" stroke="{UNSTABLE_COLOR}" stroke-width="2"/><text x="{2}" y="{6}">unstable</text></g>"#,
        WIDTH - MARGIN - 90.0,
        WIDTH - MARGIN - 70.0,
        WIDTH - MARGIN - 64.0,
        MARGIN + 16.0,
        MARGIN + 20.0,
        MARGIN + 32.0,
        MARGIN + 36.0
    );
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

//! The full diagram pipeline: symmetric branch, primary switching, secondary
//! switching and orbit expansion.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cluster_bifurc_core::continuation::{
    branch_switch, make_point, trace_branch, BifurcationEvent, Branch, BranchKind, BranchPoint,
    ContinuationSettings, EventKind, StopReason, SwitchOutcome, TraceOutput, TraceRequest,
};
use cluster_bifurc_core::diagram::Diagram;
use cluster_bifurc_core::linalg::{axpy, norm2, norm_inf};
use cluster_bifurc_core::symmetry::{isotropy_with_tol, orbit, ReducedSystem, Reduction};
use cluster_bifurc_core::{KktSystem, PotentialSpec, Problem, TetraSystem, TriangleSystem};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub window: (f64, f64),
    pub settings: ContinuationSettings,
    /// Switch at events on secondary branches as well.
    pub deep: bool,
    /// Cap on concurrent traces; 0 means one thread per branch.
    pub threads: usize,
}

/// Switching depth without `deep`: primary and secondary.
const DEFAULT_DEPTH: usize = 2;
const DEEP_DEPTH: usize = 4;

pub fn system_for(problem: Problem, potential: PotentialSpec) -> Box<dyn KktSystem> {
    match problem {
        Problem::Triangle => Box::new(TriangleSystem::new(potential)),
        Problem::Tetrahedron => Box::new(TetraSystem::new(potential)),
    }
}

/// Kernel directions on the symmetric branch whose isotropy subgroups give a
/// simple critical eigenvalue in the fixed space.
pub fn symmetric_kernel_vectors(problem: Problem) -> Vec<Vec<f64>> {
    match problem {
        Problem::Triangle => vec![vec![0.0, -2.0, 1.0, 1.0]],
        Problem::Tetrahedron => vec![
            vec![0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0],
            vec![0.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0],
            vec![0.0, -2.0, 1.0, 1.0, -2.0, 1.0, 1.0],
        ],
    }
}

fn kind_for_depth(depth: usize) -> BranchKind {
    match depth {
        0 => BranchKind::Trivial,
        1 => BranchKind::Primary,
        2 => BranchKind::Secondary,
        _ => BranchKind::Deep,
    }
}

struct Job {
    branch_id: usize,
    event_id: usize,
    depth: usize,
    reduction: Reduction,
    outcome: SwitchOutcome,
    event_point: BranchPoint,
}

struct JobResult {
    traces: Vec<Result<TraceOutput, cluster_bifurc_core::Error>>,
}

/// Runs `f` over `items` on up to `threads` scoped threads (one per item when
/// `threads` is 0); results keep input order.
pub fn run_parallel<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    let workers = if threads == 0 { items.len() } else { threads }.clamp(1, items.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Assembles the bifurcation diagram over `options.window`.
pub fn run_diagram(problem: Problem, potential: PotentialSpec, options: &PipelineOptions) -> AppResult<Diagram> {
    options
        .settings
        .validate()
        .map_err(|e| AppError::Config(e.to_string()))?;
    let (lo, hi) = options.window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(AppError::Config(format!("window: invalid parameter range [{lo}, {hi}]")));
    }
    let system = system_for(problem, potential);
    let sys: &dyn KktSystem = system.as_ref();
    let group = sys.group().clone();
    let settings = &options.settings;
    let mut diagram = Diagram::new(problem, potential, [lo, hi], settings.clone());

    // Symmetric branch, traced in the fixed space of the whole group.
    let full_red = Reduction::new(group.clone()).map_err(|e| AppError::numerical("symmetric branch", e))?;
    let rs = ReducedSystem::new(sys, &full_red);
    let n = sys.dim();
    let mut up = vec![0.0; n + 1];
    up[n] = 1.0;
    let x_lo = sys.trivial(lo).map_err(|e| AppError::numerical("symmetric branch", e))?;
    let start = make_point(sys, x_lo, lo, 0.0, up.clone()).map_err(|e| AppError::numerical("symmetric branch", e))?;
    let request = TraceRequest {
        branch_id: 0,
        window: (lo, hi),
        direction: &up,
        bifurcation_kind: EventKind::Primary,
        mirror: None,
    };
    let out = trace_branch(&rs, &start, &request, settings).map_err(|e| AppError::numerical("branch 0", e))?;
    let mut trivial = Branch::new(0, BranchKind::Trivial, out.points);
    trivial.isotropy_order = group.order();
    diagram.branches.push(trivial);
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for mut e in dedupe_events(out.events) {
        e.id = diagram.events.len();
        pending.push((e.id, 1));
        diagram.events.push(e);
    }

    let max_depth = if options.deep { DEEP_DEPTH } else { DEFAULT_DEPTH };
    let mut next_branch = 1;
    let mut traced: Vec<usize> = Vec::new();
    while !pending.is_empty() {
        let mut jobs = Vec::new();
        for (event_id, depth) in std::mem::take(&mut pending) {
            if depth > max_depth {
                continue;
            }
            let event = diagram.events[event_id].clone();
            if let Some(other) = connects_to(&diagram, &traced, &event, sys) {
                diagram.events[event_id].note = Some(format!("reached by branch {other}"));
                continue;
            }
            match prepare_jobs(sys, &event, settings) {
                Ok(prepared) => {
                    for (reduction, outcome, event_point) in prepared {
                        jobs.push(Job {
                            branch_id: PROVISIONAL_ID + jobs.len(),
                            event_id,
                            depth,
                            reduction,
                            outcome,
                            event_point,
                        });
                    }
                }
                Err(note) => diagram.events[event_id].note = Some(note),
            }
        }
        let results = run_parallel(&jobs, options.threads, |job| trace_job(sys, job, options));
        for (job, result) in jobs.iter().zip(results) {
            let errors: Vec<String> = result
                .traces
                .iter()
                .filter_map(|t| t.as_ref().err().map(|e| e.to_string()))
                .collect();
            if !errors.is_empty() {
                diagram.events[job.event_id].note = Some(format!("switched branch: {}", errors.join("; ")));
                continue;
            }
            let traces: Vec<TraceOutput> = result.traces.into_iter().map(|t| t.expect("checked")).collect();
            let mut branch = join(job, &traces);
            if let Some(other) = connects_to(&diagram, &traced, &diagram.events[job.event_id], sys) {
                diagram.events[job.event_id].note = Some(format!("reached by branch {other}"));
                continue;
            }
            branch.id = next_branch;
            next_branch += 1;
            let events: Vec<BifurcationEvent> = traces.into_iter().flat_map(|t| t.events).collect();
            for mut e in dedupe_events(events) {
                e.id = diagram.events.len();
                e.source_branch = branch.id;
                if e.kind != EventKind::Turning {
                    pending.push((e.id, job.depth + 1));
                }
                diagram.events.push(e);
            }
            traced.push(branch.id);
            diagram.branches.push(branch);
        }
    }

    // Orbit copies of every switched branch.
    let mut copies = Vec::new();
    for id in &traced {
        let b = diagram.branch(*id).expect("traced branch").clone();
        for mut image in orbit(&group, &b).into_iter().skip(1) {
            image.id = 0;
            copies.push(image);
        }
    }
    for mut c in copies {
        c.id = next_branch;
        next_branch += 1;
        diagram.branches.push(c);
    }
    diagram.branches.sort_by_key(|b| b.id);
    diagram.events.sort_by_key(|e| e.id);
    diagram
        .validate()
        .map_err(|e| AppError::numerical("diagram assembly", e))?;
    Ok(diagram)
}

/// Branch ids handed to jobs until a traced branch is accepted.
const PROVISIONAL_ID: usize = 1 << 32;

/// Merges events of the same kind closer than `1e-8` relative in the parameter.
fn dedupe_events(mut events: Vec<BifurcationEvent>) -> Vec<BifurcationEvent> {
    events.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    let mut out: Vec<BifurcationEvent> = Vec::new();
    for e in events {
        let dup = out.iter().any(|o| {
            o.kind == e.kind
                && o.source_branch == e.source_branch
                && (o.parameter - e.parameter).abs() <= 1e-8 * e.parameter.abs()
        });
        if !dup {
            out.push(e);
        }
    }
    out
}

fn prepare_jobs(
    sys: &dyn KktSystem,
    event: &BifurcationEvent,
    settings: &ContinuationSettings,
) -> Result<Vec<(Reduction, SwitchOutcome, BranchPoint)>, String> {
    if event.kind == EventKind::Turning {
        return Err("turning point".into());
    }
    let group = sys.group();
    let j = sys.jacobian(&event.state).map_err(|e| e.to_string())?;
    let scale = j.frobenius_norm();
    let directions: Vec<(Vec<f64>, Reduction)> = if event.kind == EventKind::Primary {
        symmetric_kernel_vectors(sys.problem())
            .into_iter()
            .filter(|v| norm_inf(&j.mul_vec(v)) <= 1e-6 * scale * norm_inf(v))
            .filter_map(|v| Reduction::from_vector(group, &v).ok().map(|r| (v, r)))
            .collect()
    } else if event.kernel_dim == 1 {
        let v = event.kernel_basis[0].clone();
        let hx = isotropy_with_tol(group, &event.state, 1e-7);
        let hv = isotropy_with_tol(group, &v, 1e-6);
        let red = Reduction::new(hx.intersection(&hv)).map_err(|e| e.to_string())?;
        vec![(v, red)]
    } else {
        return Err(format!("kernel dimension {} is not switched", event.kernel_dim));
    };
    if directions.is_empty() {
        return Err("no symmetric kernel direction matches the Jacobian kernel".into());
    }
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for (v, red) in directions {
        match branch_switch(sys, event, &v, &red, settings) {
            Ok(outcome) => {
                let mut t = outcome.data.v.clone();
                t.push(0.0);
                let point = make_point(sys, event.state.clone(), event.parameter, 0.0, t).map_err(|e| e.to_string())?;
                out.push((red, outcome, point));
            }
            Err(e) => notes.push(e.to_string()),
        }
    }
    if out.is_empty() {
        Err(notes.join("; "))
    } else {
        Ok(out)
    }
}

fn trace_job(sys: &dyn KktSystem, job: &Job, options: &PipelineOptions) -> JobResult {
    let rs = ReducedSystem::new(sys, &job.reduction);
    let traces = job
        .outcome
        .seeds
        .iter()
        .map(|seed| {
            let request = TraceRequest {
                branch_id: job.branch_id,
                window: options.window,
                direction: &seed.tangent,
                bifurcation_kind: EventKind::Secondary,
                mirror: job.outcome.mirror.as_ref(),
            };
            trace_branch(&rs, seed, &request, &options.settings)
        })
        .collect();
    JobResult { traces }
}

fn reversed(points: &[BranchPoint]) -> Vec<BranchPoint> {
    points
        .iter()
        .rev()
        .map(|p| {
            let mut q = p.clone();
            q.tangent.iter_mut().for_each(|t| *t = -*t);
            q
        })
        .collect()
}

/// Joins the traced halves through the bifurcation point.
fn join(job: &Job, traces: &[TraceOutput]) -> Branch {
    let (before, after): (Vec<BranchPoint>, Vec<BranchPoint>) = match (&job.outcome.mirror, traces) {
        (Some(m), [half]) => {
            let tmp = Branch::new(0, BranchKind::Primary, half.points.clone());
            (reversed(&tmp.permuted(m).points), half.points.clone())
        }
        (_, [minus, plus]) => (reversed(&minus.points), plus.points.clone()),
        (_, [only]) => (Vec::new(), only.points.clone()),
        _ => (Vec::new(), Vec::new()),
    };
    let mut points = before;
    points.push(job.event_point.clone());
    points.extend(after);
    let mut b = Branch::new(job.branch_id, kind_for_depth(job.depth), points);
    b.parent_event = Some(job.event_id);
    b.isotropy_order = job.reduction.subgroup.order();
    b.recompute_arclength();
    b
}

fn close(x: &[f64], y: &[f64], tol: f64) -> bool {
    let scale = norm_inf(x).max(1.0);
    norm2(&axpy(-1.0, x, y)) <= tol * scale
}

/// An already traced branch that ends at (an image of) the event point.
fn connects_to(diagram: &Diagram, traced: &[usize], event: &BifurcationEvent, sys: &dyn KktSystem) -> Option<usize> {
    traced.iter().copied().find(|id| {
        let b = diagram.branch(*id).expect("traced");
        let ends: Vec<&BranchPoint> = [b.points.first(), b.points.last()].into_iter().flatten().collect();
        ends.iter().any(|end| {
            (end.parameter - event.parameter).abs() <= 1e-6 * event.parameter.abs()
                && sys
                    .group()
                    .elements()
                    .iter()
                    .any(|p| close(&p.apply(&event.state), &end.state, 1e-6))
        })
    })
}

/// Whether a trace ended for a reason other than the window or a loop.
pub fn abnormal_stop(stop: StopReason) -> bool {
    matches!(stop, StopReason::StepUnderflow | StopReason::MaxPoints)
}

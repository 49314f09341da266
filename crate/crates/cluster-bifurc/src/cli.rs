//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cluster_bifurc_core::continuation::{
    make_point, newton_correct, trace_branch, Branch, BranchKind, EventKind, ParameterMode, TraceRequest,
};
use cluster_bifurc_core::diagram::Diagram;
use cluster_bifurc_core::symmetry::{isotropy_with_tol, ReducedSystem, Reduction};
use cluster_bifurc_core::tetrahedron::{stability_boundaries4, trivial_spectrum4};
use cluster_bifurc_core::triangle::{stability_boundaries3, trivial_spectrum3};
use cluster_bifurc_core::Problem;
use serde_json::json;

use crate::config::{self, RunConfig};
use crate::error::{AppError, AppResult};
use crate::export;
use crate::pipeline::{run_diagram, system_for, PipelineOptions};
use crate::svg::render_svg;
use crate::verify::run_checks;

/// Environment variable capping the number of concurrent traces.
pub const THREADS_ENV: &str = "CLUSTER_BIFURC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cluster-bifurc", version, about = "Bifurcation diagrams of constrained 3- and 4-particle arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the symmetric state and its spectrum at the configured parameters.
    Trivial(Common),
    /// Scan the symmetric branch for stability boundaries and compare with closed forms.
    Stability(Common),
    /// Continue one branch from a given start.
    Trace(Common),
    /// Run the full switching pipeline and export JSON, CSV and SVG.
    Diagram(DiagramArgs),
    /// Run the finite-difference and symmetry self-checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override a config entry by dotted key, e.g. `settings.h_max=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagramArgs {
    #[command(flatten)]
    common: Common,
    /// Switch at events deeper than the secondary level.
    #[arg(long)]
    deep: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(stderr, "  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> AppResult<RunConfig> {
    let mut c = config::load(&common.config, &common.set)?;
    if let Some(dir) = &common.out {
        c.output.dir = dir.clone();
    }
    Ok(c)
}

fn dispatch(command: Command, out: &mut dyn Write) -> AppResult<()> {
    match command {
        Command::Trivial(common) => trivial(&load(&common)?, out),
        Command::Stability(common) => stability(&load(&common)?, out),
        Command::Trace(common) => trace(&load(&common)?, out),
        Command::Diagram(args) => {
            let mut c = load(&args.common)?;
            c.diagram.deep |= args.deep;
            diagram(&c, out)
        }
        Command::Verify(args) => {
            let c = match &args.config {
                Some(path) => Some(config::load(path, &args.set)?),
                None if args.set.is_empty() => None,
                None => return Err(AppError::Config("--set needs --config".into())),
            };
            verify(c.as_ref(), args.out.as_deref(), out)
        }
    }
}

fn emit(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> AppResult<()> {
    out.write_fmt(line)
        .and_then(|()| out.write_all(b"\n"))
        .map_err(|source| AppError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { emit($out, format_args!($($arg)*))? };
}

fn numerical(context: impl Into<String>) -> impl FnOnce(cluster_bifurc_core::Error) -> AppError {
    let context = context.into();
    move |e| AppError::numerical(context, e)
}

fn param_symbol(problem: Problem) -> &'static str {
    match problem {
        Problem::Triangle => "A",
        Problem::Tetrahedron => "V",
    }
}

fn trivial(c: &RunConfig, out: &mut dyn Write) -> AppResult<()> {
    let sys = system_for(c.problem, c.potential);
    let params = if c.trivial.parameters.is_empty() {
        c.window.to_vec()
    } else {
        c.trivial.parameters.clone()
    };
    let sym = param_symbol(c.problem);
    let mut records = Vec::new();
    for p in params {
        let x = sys.trivial(p).map_err(numerical(format!("trivial state at {sym} = {p}")))?;
        let class = sys.classify(&x).map_err(numerical(format!("classification at {sym} = {p}")))?;
        say!(out, "{sym} = {p}");
        say!(out, "  lambda = {:.12e}", x[0]);
        say!(out, "  edge   = {:.12e}", x[1]);
        say!(out, "  energy = {:.12e}", sys.energy(&x));
        let spectrum = match c.problem {
            Problem::Triangle => {
                let s = trivial_spectrum3(&c.potential, p).map_err(numerical("trivial spectrum"))?;
                say!(out, "  mu (double) = {:.12e}", s.mu);
                say!(out, "  simple pair = {:.12e}, {:.12e}", s.simple_pair[0], s.simple_pair[1]);
                json!({"mu": s.mu, "simple_pair": s.simple_pair})
            }
            Problem::Tetrahedron => {
                let s = trivial_spectrum4(&c.potential, p).map_err(numerical("trivial spectrum"))?;
                say!(out, "  mu1 (triple) = {:.12e}", s.mu1);
                say!(out, "  mu2 (double) = {:.12e}", s.mu2);
                say!(out, "  tangent-space eigenvalues = {:?}", s.u_eigs);
                json!({"mu1": s.mu1, "mu2": s.mu2, "u_eigs": s.u_eigs})
            }
        };
        say!(out, "  {:?}", class.stability);
        records.push(json!({
            "parameter": p,
            "state": x,
            "energy": sys.energy(&x),
            "stability": class.stability,
            "spectrum": spectrum,
        }));
    }
    let path = c.output.dir.join("trivial.json");
    let text = serde_json::to_string_pretty(&records).map_err(|e| AppError::Format {
        context: "trivial JSON".into(),
        message: e.to_string(),
    })?;
    export::write_file(&path, &text)
}

fn stability(c: &RunConfig, out: &mut dyn Write) -> AppResult<()> {
    let [lo, hi] = c.stability.range.unwrap_or(c.window);
    let roots = match c.problem {
        Problem::Triangle => stability_boundaries3(&c.potential, lo, hi, c.stability.grid),
        Problem::Tetrahedron => stability_boundaries4(&c.potential, lo, hi, c.stability.grid),
    }
    .map_err(numerical("stability scan"))?;
    let sym = param_symbol(c.problem);
    say!(out, "stability boundaries on [{lo}, {hi}]: {}", roots.len());
    for r in &roots {
        say!(
            out,
            "  {} = 0 at {sym} = {:.10}  slope {:+.3e}  kernel {}{}",
            r.eigenvalue,
            r.parameter,
            r.slope,
            r.kernel_dim,
            if r.transversal { "" } else { "  (not transversal)" }
        );
    }
    let closed = c.potential.closed_form_thresholds(c.problem);
    if closed.is_empty() {
        say!(out, "no closed-form thresholds for this potential");
    }
    for t in &closed {
        let name = match (c.problem, t.coefficient) {
            (Problem::Triangle, _) => "mu",
            (Problem::Tetrahedron, 3) => "mu1",
            _ => "mu2",
        };
        let nearest = roots
            .iter()
            .filter(|r| r.eigenvalue == name)
            .min_by(|a, b| (a.parameter - t.value).abs().total_cmp(&(b.parameter - t.value).abs()));
        match nearest {
            Some(r) => {
                let diff = (r.parameter - t.value).abs();
                let verdict = if diff <= 1e-6 * t.value.abs().max(1.0) {
                    "agree"
                } else {
                    "DISAGREE"
                };
                say!(
                    out,
                    "  closed form {} = {:.10}  numeric {:.10}  |diff| {:.2e}  {verdict}",
                    t.name,
                    t.value,
                    r.parameter,
                    diff
                );
            }
            None => say!(out, "  closed form {} = {:.10}  (outside the scan range)", t.name, t.value),
        }
    }
    let path = c.output.dir.join("stability.json");
    let text = serde_json::to_string_pretty(&json!({"roots": roots, "closed_form": closed})).map_err(|e| {
        AppError::Format {
            context: "stability JSON".into(),
            message: e.to_string(),
        }
    })?;
    export::write_file(&path, &text)
}

fn trace(c: &RunConfig, out: &mut dyn Write) -> AppResult<()> {
    let sys = system_for(c.problem, c.potential);
    let sym = param_symbol(c.problem);
    let dir = c.trace.direction;
    let p0 = c.trace.start.unwrap_or(if dir > 0.0 { c.window[0] } else { c.window[1] });
    let guess = match &c.trace.state {
        Some(x) => x.clone(),
        None => sys.trivial(p0).map_err(numerical(format!("trivial state at {sym} = {p0}")))?,
    };
    let reduction = if c.trace.symmetric {
        Reduction::new(isotropy_with_tol(sys.group(), &guess, 1e-7)).map_err(numerical("trace reduction"))?
    } else {
        Reduction::full(sys.dim())
    };
    let rs = ReducedSystem::new(sys.as_ref(), &reduction);
    let corrected = newton_correct(&rs, &reduction.restrict(&guess), p0, ParameterMode::Fixed, &c.settings)
        .map_err(numerical(format!("start point at {sym} = {p0}")))?;
    let x0 = reduction.lift(&corrected.y);
    let n = sys.dim();
    let mut direction = vec![0.0; n + 1];
    direction[n] = dir;
    let start = make_point(sys.as_ref(), x0, p0, 0.0, direction.clone()).map_err(numerical("start point"))?;
    let kind = if reduction.subgroup.order() == sys.group().order() {
        EventKind::Primary
    } else {
        EventKind::Secondary
    };
    let request = TraceRequest {
        branch_id: 0,
        window: (c.window[0], c.window[1]),
        direction: &direction,
        bifurcation_kind: kind,
        mirror: None,
    };
    let traced = trace_branch(&rs, &start, &request, &c.settings).map_err(numerical("branch 0"))?;
    let mut d = Diagram::new(c.problem, c.potential, c.window, c.settings.clone());
    let mut branch = Branch::new(
        0,
        if kind == EventKind::Primary { BranchKind::Trivial } else { BranchKind::Primary },
        traced.points,
    );
    branch.isotropy_order = reduction.subgroup.order();
    d.branches.push(branch);
    for (i, mut e) in traced.events.into_iter().enumerate() {
        e.id = i;
        d.events.push(e);
    }
    say!(out, "branch 0: {} points, stopped by {:?}", d.branches[0].points.len(), traced.stop);
    report_events(&d, out)?;
    write_outputs(c, &d, out)
}

fn report_events(d: &Diagram, out: &mut dyn Write) -> AppResult<()> {
    let sym = param_symbol(d.problem);
    for e in &d.events {
        say!(
            out,
            "event {}: {} at {sym} = {:.8} on branch {} (kernel {}){}",
            e.id,
            e.kind.as_str(),
            e.parameter,
            e.source_branch,
            e.kernel_dim,
            e.note.as_ref().map(|n| format!("  [{n}]")).unwrap_or_default()
        );
    }
    Ok(())
}

fn write_outputs(c: &RunConfig, d: &Diagram, out: &mut dyn Write) -> AppResult<()> {
    let dir = &c.output.dir;
    let stem = &c.output.stem;
    let mut written = Vec::new();
    if c.output.json {
        let path = dir.join(format!("{stem}.json"));
        export::write_file(&path, &export::to_json(d)?)?;
        written.push(path);
    }
    if c.output.csv {
        let path = dir.join(format!("{stem}.csv"));
        export::write_file(&path, &export::to_csv(d)?)?;
        written.push(path);
    }
    for proj in &c.diagram.plots {
        let path = dir.join(format!("{stem}_{}.svg", proj.slug()));
        export::write_file(&path, &render_svg(d, proj)?)?;
        written.push(path);
    }
    let meta = json!({
        "generated_unix_seconds": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|t| t.as_secs())
            .unwrap_or(0),
        "version": env!("CARGO_PKG_VERSION"),
        "config": c,
    });
    let path = dir.join(format!("{stem}.meta.json"));
    export::write_file(&path, &serde_json::to_string_pretty(&meta).expect("serializable metadata"))?;
    for p in written {
        say!(out, "wrote {}", p.display());
    }
    Ok(())
}

/// Thread cap from the config, else the environment, else one per branch.
fn thread_count(c: &RunConfig) -> AppResult<usize> {
    if let Some(n) = c.diagram.threads {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| AppError::Config(format!("{THREADS_ENV}: expected a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn diagram(c: &RunConfig, out: &mut dyn Write) -> AppResult<()> {
    let options = PipelineOptions {
        window: (c.window[0], c.window[1]),
        settings: c.settings.clone(),
        deep: c.diagram.deep,
        threads: thread_count(c)?,
    };
    let d = run_diagram(c.problem, c.potential, &options)?;
    say!(out, "{} branches, {} events", d.branches.len(), d.events.len());
    for b in &d.branches {
        let (lo, hi) = b.parameter_range().unwrap_or((f64::NAN, f64::NAN));
        say!(
            out,
            "branch {}: {:?}, {} points, {} in [{lo:.6}, {hi:.6}]{}",
            b.id,
            b.kind,
            b.points.len(),
            param_symbol(c.problem),
            b.orbit_of.map(|o| format!(", image of branch {o}")).unwrap_or_default()
        );
    }
    report_events(&d, out)?;
    write_outputs(c, &d, out)
}

fn verify(c: Option<&RunConfig>, out_dir: Option<&Path>, out: &mut dyn Write) -> AppResult<()> {
    let potential = c.map(|c| c.potential).unwrap_or_else(|| config::default_config(Problem::Triangle).potential);
    let checks = run_checks(potential);
    let failed = checks.iter().filter(|c| !c.passed).count();
    for ch in &checks {
        say!(out, "{} {}: {}", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.detail);
    }
    if let Some(dir) = out_dir {
        let rows: Vec<_> = checks
            .iter()
            .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
            .collect();
        let text = serde_json::to_string_pretty(&rows).expect("serializable checks");
        export::write_file(&dir.join("verify.json"), &text)?;
    }
    if failed > 0 {
        Err(AppError::Verification(format!("{failed} of {} checks failed", checks.len())))
    } else {
        say!(out, "all {} checks passed", checks.len());
        Ok(())
    }
}

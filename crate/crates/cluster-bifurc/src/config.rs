//! Run configuration: one JSON file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use cluster_bifurc_core::continuation::ContinuationSettings;
use cluster_bifurc_core::{PotentialSpec, Problem};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AppError, AppResult};
use crate::svg::Projection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub potential: PotentialSpec,
    /// Parameter window `[lo, hi]` for tracing and scanning.
    pub window: [f64; 2],
    #[serde(default)]
    pub settings: ContinuationSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub trivial: TrivialOptions,
    #[serde(default)]
    pub stability: StabilityOptions,
    #[serde(default)]
    pub trace: TraceOptions,
    #[serde(default)]
    pub diagram: DiagramOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem shared by the JSON, CSV and SVG outputs.
    pub stem: String,
    pub json: bool,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            stem: "diagram".into(),
            json: true,
            csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrivialOptions {
    /// Parameter values to report; empty means the window ends.
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityOptions {
    /// Scan interval; the window when absent.
    pub range: Option<[f64; 2]>,
    pub grid: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions { range: None, grid: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    /// Starting parameter; the lower window end when absent.
    pub start: Option<f64>,
    /// Full starting state (multiplier first); the symmetric solution when absent.
    pub state: Option<Vec<f64>>,
    /// +1 to start with increasing parameter, -1 for decreasing.
    pub direction: f64,
    /// Trace in the fixed space of the starting state's isotropy subgroup.
    pub symmetric: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            start: None,
            state: None,
            direction: 1.0,
            symmetric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramOptions {
    pub deep: bool,
    /// Trace threads; absent means `CLUSTER_BIFURC_THREADS` or one per branch.
    pub threads: Option<usize>,
    pub plots: Vec<Projection>,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        DiagramOptions {
            deep: false,
            threads: None,
            plots: vec![Projection::ParamVsComponent { component: "a".into() }],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> AppResult<()> {
        let [lo, hi] = self.window;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(AppError::Config(format!("window: need 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if let Some([a, b]) = self.stability.range {
            if !(a > 0.0 && b > a && b.is_finite()) {
                return Err(AppError::Config(format!("stability.range: need 0 < lo < hi, got [{a}, {b}]")));
            }
        }
        if self.stability.grid < 2 {
            return Err(AppError::Config("stability.grid: need at least 2 points".into()));
        }
        if self.trace.direction != 1.0 && self.trace.direction != -1.0 {
            return Err(AppError::Config(format!(
                "trace.direction: expected 1 or -1, got {}",
                self.trace.direction
            )));
        }
        if let Some(p) = self.trace.start {
            if !(p >= lo && p <= hi) {
                return Err(AppError::Config(format!("trace.start: {p} lies outside the window")));
            }
        }
        if let Some(s) = &self.trace.state {
            let n = match self.problem {
                Problem::Triangle => 4,
                Problem::Tetrahedron => 7,
            };
            if s.len() != n {
                return Err(AppError::Config(format!("trace.state: expected {n} entries, got {}", s.len())));
            }
        }
        if self.output.stem.is_empty() || self.output.stem.contains(['/', '\\']) {
            return Err(AppError::Config(format!("output.stem: invalid file stem {:?}", self.output.stem)));
        }
        self.settings
            .validate()
            .map_err(|e| AppError::Config(format!("settings: {e}")))
    }
}

/// Reads `path`, applies `overrides` and deserializes the result.
pub fn load(path: &Path, overrides: &[String]) -> AppResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    from_value(value, overrides)
}

/// Applies `overrides` to a JSON document and deserializes it.
pub fn from_value(mut value: Value, overrides: &[String]) -> AppResult<RunConfig> {
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let config: RunConfig = serde_json::from_value(value).map_err(|e| AppError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Sets the dotted `key` of `value` from `key=raw`. The right-hand side is read
/// as JSON when it parses and as a string otherwise.
pub fn apply_override(value: &mut Value, assignment: &str) -> AppResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| AppError::Config(format!("--set {assignment}: expected key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(AppError::Config(format!("--set {assignment}: empty key segment")));
    }
    let new = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cursor = value;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cursor = match cursor {
            Value::Object(map) => {
                if last {
                    map.insert((*seg).to_string(), new);
                    return Ok(());
                }
                map.entry((*seg).to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| AppError::Config(format!("--set {key}: `{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| AppError::Config(format!("--set {key}: index {idx} out of range ({len} items)")))?;
                if last {
                    *slot = new;
                    return Ok(());
                }
                slot
            }
            _ => {
                let prefix = segments[..i].join(".");
                return Err(AppError::Config(format!("--set {key}: `{prefix}` is not an object")));
            }
        };
    }
    unreachable!("the last segment returns")
}

/// Configuration used by `verify` when no file is given.
pub fn default_config(problem: Problem) -> RunConfig {
    let (window, component) = match problem {
        Problem::Triangle => ([0.3, 0.9], "a"),
        Problem::Tetrahedron => ([0.1, 0.4], "a"),
    };
    RunConfig {
        problem,
        potential: PotentialSpec::LennardJones {
            c1: 1.0,
            c2: 2.0,
            delta1: 12.0,
            delta2: 6.0,
        },
        window,
        settings: ContinuationSettings::default(),
        output: OutputConfig::default(),
        trivial: TrivialOptions::default(),
        stability: StabilityOptions::default(),
        trace: TraceOptions::default(),
        diagram: DiagramOptions {
            plots: vec![Projection::ParamVsComponent {
                component: component.into(),
            }],
            ..DiagramOptions::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> Value {
        json!({
            "problem": "triangle",
            "potential": {"family": "lennard_jones", "params": {"c1": 1.0, "c2": 2.0, "delta1": 12.0, "delta2": 6.0}},
            "window": [0.3, 0.9]
        })
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = from_value(base(), &[]).unwrap();
        assert_eq!(c.settings, ContinuationSettings::default());
        assert_eq!(c.output.stem, "diagram");
        assert!(!c.diagram.deep);
    }

    #[test]
    fn dotted_overrides() {
        let c = from_value(
            base(),
            &[
                "settings.h_max=0.25".into(),
                "window.1=0.8".into(),
                "diagram.deep=true".into(),
                "output.stem=lj".into(),
                "potential.params.c2=2.5".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.settings.h_max, 0.25);
        assert_eq!(c.window, [0.3, 0.8]);
        assert!(c.diagram.deep);
        assert_eq!(c.output.stem, "lj");
        assert!(matches!(c.potential, PotentialSpec::LennardJones { c2, .. } if c2 == 2.5));
    }

    #[test]
    fn errors_name_the_field() {
        let e = from_value(base(), &["settings.h_mx=1".into()]).unwrap_err();
        assert!(e.to_string().contains("h_mx"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let e = from_value(base(), &["window=[0.9, 0.3]".into()]).unwrap_err();
        assert!(e.to_string().contains("window"), "{e}");
        let mut v = base();
        v["potential"]["family"] = json!("morse");
        let e = from_value(v, &[]).unwrap_err();
        assert!(e.to_string().contains("morse"), "{e}");
        let e = from_value(base(), &["window.7=1".into()]).unwrap_err();
        assert!(e.to_string().contains("out of range"), "{e}");
        let e = from_value(base(), &["noequals".into()]).unwrap_err();
        assert!(e.to_string().contains("key=value"), "{e}");
    }
}

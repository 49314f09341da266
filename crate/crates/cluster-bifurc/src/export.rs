//! JSON and CSV serialization of diagrams.

use std::path::Path;

use cluster_bifurc_core::diagram::Diagram;

use crate::error::{AppError, AppResult};

/// Pretty-printed JSON; floats are written in shortest round-trip form.
pub fn to_json(diagram: &Diagram) -> AppResult<String> {
    serde_json::to_string_pretty(diagram).map_err(|e| AppError::Format {
        context: "diagram JSON".into(),
        message: e.to_string(),
    })
}

pub fn from_json(text: &str) -> AppResult<Diagram> {
    let d: Diagram = serde_json::from_str(text).map_err(|e| AppError::Format {
        context: "diagram JSON".into(),
        message: e.to_string(),
    })?;
    d.validate().map_err(|e| AppError::Format {
        context: "diagram JSON".into(),
        message: e.to_string(),
    })?;
    Ok(d)
}

/// Column names of the CSV export.
pub fn csv_header(diagram: &Diagram) -> Vec<String> {
    let mut h: Vec<String> = ["branch_id", "s", "parameter", "lambda"].map(String::from).to_vec();
    h.extend(diagram.problem.edge_names().iter().map(|e| e.to_string()));
    h.push("stable".into());
    h.push("shape".into());
    h
}

/// Seventeen significant digits, enough to recover every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per branch point.
pub fn to_csv(diagram: &Diagram) -> AppResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| AppError::Format {
        context: "diagram CSV".into(),
        message: e.to_string(),
    };
    w.write_record(csv_header(diagram)).map_err(fail)?;
    for b in &diagram.branches {
        for p in &b.points {
            let mut row = vec![b.id.to_string(), fmt_f64(p.arclength), fmt_f64(p.parameter)];
            row.extend(p.state.iter().map(|&x| fmt_f64(x)));
            row.push(if p.stability.is_stable() { "1" } else { "0" }.into());
            row.push(p.shape.as_str().into());
            w.write_record(&row).map_err(fail)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| AppError::Format {
        context: "diagram CSV".into(),
        message: e.to_string(),
    })?;
    String::from_utf8(bytes).map_err(|e| AppError::Format {
        context: "diagram CSV".into(),
        message: e.to_string(),
    })
}

pub fn write_file(path: &Path, contents: &str) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| AppError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| AppError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.to_path_buf(),
        source,
    })
}

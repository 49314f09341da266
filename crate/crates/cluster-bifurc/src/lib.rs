//! Bifurcation diagrams of constrained three- and four-particle arrays: the
//! switching pipeline, JSON/CSV export, SVG rendering and the command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod svg;
pub mod verify;

pub use cluster_bifurc_core as core;

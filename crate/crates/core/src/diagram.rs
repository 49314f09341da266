//! The assembled bifurcation diagram.

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::continuation::{BifurcationEvent, Branch, ContinuationSettings};
use crate::error::{usage, Result};
use crate::potentials::PotentialSpec;
use crate::Problem;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Diagram {
    pub problem: Problem,
    pub potential: PotentialSpec,
    /// Parameter window the branches were traced in.
    pub window: [f64; 2],
    pub branches: Vec<Branch>,
    pub events: Vec<BifurcationEvent>,
    pub settings: ContinuationSettings,
    pub version: String,
}

impl Diagram {
    pub fn new(problem: Problem, potential: PotentialSpec, window: [f64; 2], settings: ContinuationSettings) -> Self {
        Diagram {
            problem,
            potential,
            window,
            branches: Vec::new(),
            events: Vec::new(),
            settings,
            version: String::from(env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn branch(&self, id: usize) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn event(&self, id: usize) -> Option<&BifurcationEvent> {
        self.events.iter().find(|e| e.id == id)
    }

    /// Checks that events refer to existing branches and that every branch is
    /// ordered by arclength.
    pub fn validate(&self) -> Result<()> {
        for e in &self.events {
            if self.branch(e.source_branch).is_none() {
                return Err(usage(alloc::format!(
                    "event {} refers to missing branch {}",
                    e.id,
                    e.source_branch
                )));
            }
        }
        for b in &self.branches {
            if b.points.windows(2).any(|w| w[1].arclength < w[0].arclength) {
                return Err(usage(alloc::format!("branch {} is not ordered by arclength", b.id)));
            }
            if let Some(pe) = b.parent_event {
                if self.event(pe).is_none() {
                    return Err(usage(alloc::format!("branch {} refers to missing event {pe}", b.id)));
                }
            }
        }
        Ok(())
    }
}

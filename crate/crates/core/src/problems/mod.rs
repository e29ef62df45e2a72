//! Concrete optimisation problems.
//!
//! A [`Problem`] owns its genome layout and a pure fitness function to be
//! minimised. [`ProblemDef`] is the serialisable description used by
//! experiment configs and shipped to remote workers.

mod lb;
mod string;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{Genome, GenomeSpec};

pub use lb::{
    lb_fitness, lb_genome_spec, lb_simulate, Backend, BackendSlot, BackendState, LbGenomeView,
    LbSimProblem, SimOutcome, TrafficProfile, MAX_WEIGHT,
};
pub use string::{
    decode_string, encode_string, search_space_size, string_fitness, StringSearchProblem,
    ALPHABET_HI, ALPHABET_LO, DEFAULT_TARGET,
};

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("target string is empty")]
    EmptyTarget,
    #[error("target character {ch:?} at position {index} is outside the alphabet [{lo}, {hi}]")]
    TargetOutsideAlphabet {
        index: usize,
        ch: char,
        lo: i64,
        hi: i64,
    },
    #[error("load-balancer instance needs at least one backend")]
    NoBackends,
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// A minimisation problem over integer genomes.
///
/// `fitness` must be a pure function of the genome: evaluators are free to
/// run it on any thread or host, in any order, any number of times.
pub trait Problem: Send + Sync {
    /// Name used to address the problem on the wire.
    fn id(&self) -> &str;

    fn genome_spec(&self) -> &GenomeSpec;

    fn fitness(&self, genome: &Genome) -> f64;

    /// Fitness at which a run counts as converged, when the optimum is known.
    fn target_fitness(&self) -> Option<f64> {
        None
    }
}

/// Serialisable problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemDef {
    StringSearch {
        #[serde(default = "default_target")]
        target: String,
    },
    LbSim {
        #[serde(default = "Backend::default_pair")]
        backends: Vec<Backend>,
        #[serde(default)]
        traffic: TrafficProfile,
    },
}

fn default_target() -> String {
    DEFAULT_TARGET.to_string()
}

impl ProblemDef {
    pub fn string_search() -> Self {
        ProblemDef::StringSearch {
            target: default_target(),
        }
    }

    pub fn lb_sim() -> Self {
        ProblemDef::LbSim {
            backends: Backend::default_pair(),
            traffic: TrafficProfile::default(),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ProblemDef::StringSearch { .. } => StringSearchProblem::ID,
            ProblemDef::LbSim { .. } => LbSimProblem::ID,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Problem>, ProblemError> {
        Ok(match self {
            ProblemDef::StringSearch { target } => Arc::new(StringSearchProblem::new(target)?),
            ProblemDef::LbSim { backends, traffic } => {
                Arc::new(LbSimProblem::new(backends.clone(), traffic.clone())?)
            }
        })
    }
}

/// Problems a worker can evaluate, keyed by [`Problem::id`].
#[derive(Clone, Default)]
pub struct ProblemRegistry {
    problems: BTreeMap<String, Arc<dyn Problem>>,
}

impl ProblemRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the default string-search and load-balancer instances.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        for def in [ProblemDef::string_search(), ProblemDef::lb_sim()] {
            reg.insert(def.build().expect("built-in problem definitions are valid"));
        }
        reg
    }

    /// Adds or replaces a problem under its own id.
    pub fn insert(&mut self, problem: Arc<dyn Problem>) {
        self.problems.insert(problem.id().to_string(), problem);
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Problem>> {
        self.problems.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.problems.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for ProblemRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.problems.keys()).finish()
    }
}

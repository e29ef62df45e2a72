//! Seed-reproducible evolutionary search that can run on a single laptop or be
//! spread over a handful of small networked nodes.
//!
//! The crate is organised bottom-up:
//!
//! * [`rng`] and [`genome`]: the deterministic PRNG and the integer genome with
//!   its variation operators. Every random decision in the crate flows through
//!   [`RngState`], so a seed fully determines a run on any host.
//! * [`problems`]: the string-search instance and a deterministic load-balanced
//!   cluster simulation.
//! * [`engine`]: generational GA, equal-budget random search and a (1+1)-online
//!   EA, all written against the [`Evaluator`] abstraction.
//! * [`dist`]: coordinator/worker protocol that implements [`Evaluator`] over TCP
//!   (or an in-process loopback).
//! * [`telemetry`]: best-effort host sampling (temperature, memory, throttling).
//! * [`stats`]: Mann-Whitney U, Vargha-Delaney A12 and descriptive summaries.

pub mod dist;
pub mod engine;
pub mod genome;
pub mod problems;
pub mod rng;
pub mod stats;
pub mod telemetry;

pub use engine::{
    ga_run, ga_run_with, one_plus_one_online_run, random_search_run, EvalError, Evaluation,
    Evaluator, GaConfig, GenerationRecord, LocalEvaluator, ReplicateResult, RunOptions,
};
pub use genome::{Genome, GenomeSpec, Individual, Locus, Population};
pub use problems::{Problem, ProblemDef, ProblemRegistry};
pub use rng::RngState;
pub use telemetry::{TelemetrySnapshot, ThrottleFlags};

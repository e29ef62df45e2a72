//! Search algorithms and the evaluation-dispatch abstraction they share.
//!
//! All algorithms minimise. The evolutionary loop is strictly sequential and
//! every PRNG draw happens on the caller's thread; evaluators only ever see
//! ordered batches of genomes and must return fitnesses in the same order.
//! That is why a run is bit-identical whether it is evaluated locally or by
//! a pool of remote workers.

mod ga;
mod online;
mod random;

use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::Genome;
use crate::problems::Problem;
use crate::telemetry::{self, TelemetrySnapshot};

pub use ga::{ga_run, ga_run_with, ga_step, initial_population, select_parent_weighted, GaConfig};
pub use online::one_plus_one_online_run;
pub use random::random_search_run;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no workers available: {0}")]
    NoWorkers(String),
    #[error("worker {worker} rejected task {task_id}: {message}")]
    Rejected {
        worker: String,
        task_id: u64,
        message: String,
    },
    #[error("evaluator returned {got} results for {expected} genomes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("transport failure: {0}")]
    Transport(String),
}

/// Result of evaluating one genome.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub eval_ms: f64,
    pub evaluated_by: Option<String>,
}

/// Evaluates ordered batches of genomes for a problem.
///
/// Implementations may evaluate concurrently but must return results in
/// input order, and results must depend only on genome content.
pub trait Evaluator {
    fn evaluate(
        &mut self,
        problem: &dyn Problem,
        genomes: &[Genome],
    ) -> Result<Vec<Evaluation>, EvalError>;
}

impl<E: Evaluator + ?Sized> Evaluator for &mut E {
    fn evaluate(
        &mut self,
        problem: &dyn Problem,
        genomes: &[Genome],
    ) -> Result<Vec<Evaluation>, EvalError> {
        (**self).evaluate(problem, genomes)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(
        &mut self,
        problem: &dyn Problem,
        genomes: &[Genome],
    ) -> Result<Vec<Evaluation>, EvalError> {
        (**self).evaluate(problem, genomes)
    }
}

/// Evaluates in the calling thread.
#[derive(Clone, Debug, Default)]
pub struct LocalEvaluator;

impl Evaluator for LocalEvaluator {
    fn evaluate(
        &mut self,
        problem: &dyn Problem,
        genomes: &[Genome],
    ) -> Result<Vec<Evaluation>, EvalError> {
        Ok(genomes
            .iter()
            .map(|g| {
                let start = Instant::now();
                let fitness = problem.fitness(g);
                Evaluation {
                    fitness,
                    eval_ms: start.elapsed().as_secs_f64() * 1e3,
                    evaluated_by: None,
                }
            })
            .collect())
    }
}

/// Wraps an evaluator and counts the genomes that pass through it.
#[derive(Debug, Default)]
pub struct CountingEvaluator<E> {
    inner: E,
    genomes: u64,
    batches: u64,
}

impl<E: Evaluator> CountingEvaluator<E> {
    pub fn new(inner: E) -> Self {
        CountingEvaluator {
            inner,
            genomes: 0,
            batches: 0,
        }
    }

    pub fn genomes(&self) -> u64 {
        self.genomes
    }

    pub fn batches(&self) -> u64 {
        self.batches
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: Evaluator> Evaluator for CountingEvaluator<E> {
    fn evaluate(
        &mut self,
        problem: &dyn Problem,
        genomes: &[Genome],
    ) -> Result<Vec<Evaluation>, EvalError> {
        self.genomes += genomes.len() as u64;
        self.batches += 1;
        self.inner.evaluate(problem, genomes)
    }
}

/// Evaluates and checks the evaluator kept the batch length.
pub(crate) fn evaluate_batch(
    evaluator: &mut dyn Evaluator,
    problem: &dyn Problem,
    genomes: &[Genome],
) -> Result<Vec<Evaluation>, EvalError> {
    let out = evaluator.evaluate(problem, genomes)?;
    if out.len() != genomes.len() {
        return Err(EvalError::LengthMismatch {
            expected: genomes.len(),
            got: out.len(),
        });
    }
    Ok(out)
}

/// One row of a run trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations_so_far: u64,
    pub wall_ms: u64,
    pub telemetry: Option<TelemetrySnapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub seed: u64,
    pub converged: bool,
    /// Completed generations (GA), blocks (random search) or windows (1+1).
    pub generations: u64,
    pub total_evaluations: u64,
    pub total_wall_ms: u64,
    pub best_genome: Genome,
    pub best_fitness: f64,
    pub trace: Vec<GenerationRecord>,
    /// Set when the run stopped early because of an evaluator failure or a
    /// cancellation request.
    pub error: Option<String>,
}

impl ReplicateResult {
    /// Canonical text of everything a seed determines: outcome fields and the
    /// trace without wall-clock and telemetry columns. Two runs of one seed
    /// must produce identical digests on any host and with any evaluator.
    pub fn logical_digest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed={} converged={} generations={} evaluations={} best={:?} error={:?}",
            self.seed,
            self.converged,
            self.generations,
            self.total_evaluations,
            self.best_fitness,
            self.error
        );
        let _ = writeln!(out, "genome={:?}", self.best_genome.genes());
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{}",
                r.generation, r.best_fitness, r.mean_fitness, r.evaluations_so_far
            );
        }
        out
    }
}

/// Knobs that do not affect the logical outcome of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Attach a host telemetry snapshot every `n` generations.
    pub telemetry_every: Option<u64>,
    /// Checked between generations; a set flag ends the run early.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl RunOptions {
    pub(crate) fn cancelled(&self) -> bool {
        self.cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::Relaxed))
    }

    pub(crate) fn telemetry_for(&self, generation: u64) -> Option<TelemetrySnapshot> {
        match self.telemetry_every {
            Some(n) if n > 0 && generation.is_multiple_of(n) => Some(telemetry::sample_host()),
            _ => None,
        }
    }
}

pub(crate) struct Clock(Instant);

impl Clock {
    pub(crate) fn start() -> Self {
        Clock(Instant::now())
    }

    pub(crate) fn ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0u64), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

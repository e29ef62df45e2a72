//! Replicate orchestration and result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use insitu_core::dist::Coordinator;
use insitu_core::engine::{one_plus_one_online_run, random_search_run};
use insitu_core::stats::{describe, Summary};
use insitu_core::{
    ga_run_with, Evaluator, LocalEvaluator, Problem, ProblemDef, ReplicateResult, RunOptions,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, EvaluatorConfig, ExperimentConfig};
use crate::CliError;

pub const TRACE_HEADER: [&str; 9] = [
    "replicate",
    "generation",
    "best_fitness",
    "mean_fitness",
    "evaluations",
    "wall_ms",
    "cpu_temp_milli_c",
    "mem_available_bytes",
    "throttled_now",
];

pub const SUMMARY_FILE: &str = "summary.json";

/// One line of a trace CSV. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub replicate: u32,
    pub generation: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: u64,
    pub wall_ms: u64,
    pub cpu_temp_milli_c: Option<i64>,
    pub mem_available_bytes: Option<u64>,
    pub throttled_now: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicate: u32,
    pub seed: u64,
    pub converged: bool,
    pub generations: u64,
    pub total_evaluations: u64,
    pub total_wall_ms: u64,
    pub best_fitness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub trace_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub problem: ProblemDef,
    pub algorithm: Algorithm,
    pub seed_base: u64,
    pub replicates_requested: u32,
    /// False when the run was interrupted before every replicate finished.
    pub complete: bool,
    pub converged: u32,
    pub replicates: Vec<ReplicateSummary>,
    /// Descriptive statistics per metric over the finished replicates.
    pub stats: BTreeMap<String, Summary>,
}

impl ExperimentSummary {
    /// Replicates that stopped on an evaluator failure.
    pub fn failures(&self) -> impl Iterator<Item = &ReplicateSummary> {
        self.replicates
            .iter()
            .filter(|r| r.error.as_deref().is_some_and(|e| e != CANCELLED))
    }
}

const CANCELLED: &str = "cancelled";

#[derive(Clone, Debug)]
pub struct ResultFiles {
    pub output_dir: PathBuf,
    pub traces: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: ExperimentSummary,
}

#[derive(Clone, Debug, Default)]
pub struct RunControl {
    /// Run local replicates concurrently.
    pub parallel_replicates: bool,
    /// Set from a signal handler to stop after the current generation.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl RunControl {
    fn cancelled(&self) -> bool {
        self.cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

/// Runs every replicate of `config` and writes one trace CSV per replicate
/// plus `summary.json` into the output directory.
///
/// Each trace is written as soon as its replicate ends, so an interrupted
/// run still leaves the finished replicates (and the partial one) on disk.
pub fn run_experiment(
    config: &ExperimentConfig,
    control: &RunControl,
) -> Result<ResultFiles, CliError> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    write_json(&dir.join("config.json"), config)?;

    let problem = config
        .problem
        .build()
        .map_err(|e| CliError::Config(format!("problem: {e}")))?;
    let options = RunOptions {
        telemetry_every: (config.telemetry_every_n_generations > 0)
            .then_some(config.telemetry_every_n_generations),
        cancel: control.cancel.clone(),
    };

    let replicate =
        |r: u32, evaluator: &mut dyn Evaluator| -> Result<Option<ReplicateSummary>, CliError> {
            if control.cancelled() {
                return Ok(None);
            }
            let result = run_replicate(
                config,
                problem.as_ref(),
                evaluator,
                config.seed(r),
                &options,
            );
            let file = format!("trace-{r:03}.csv");
            write_trace(&dir.join(&file), r, &result)?;
            if let Some(e) = &result.error {
                log::warn!("replicate {r} stopped early: {e}");
            } else {
                log::info!(
                    "replicate {r}: best {} after {} generations, {} evaluations",
                    result.best_fitness,
                    result.generations,
                    result.total_evaluations
                );
            }
            Ok(Some(ReplicateSummary {
                replicate: r,
                seed: result.seed,
                converged: result.converged,
                generations: result.generations,
                total_evaluations: result.total_evaluations,
                total_wall_ms: result.total_wall_ms,
                best_fitness: result.best_fitness,
                error: result.error,
                trace_file: file,
            }))
        };

    let outcomes: Vec<Option<ReplicateSummary>> = match &config.evaluator {
        EvaluatorConfig::Local if control.parallel_replicates => (1..=config.replicates)
            .into_par_iter()
            .map(|r| replicate(r, &mut LocalEvaluator))
            .collect::<Result<_, _>>()?,
        EvaluatorConfig::Local => (1..=config.replicates)
            .map(|r| replicate(r, &mut LocalEvaluator))
            .collect::<Result<_, _>>()?,
        EvaluatorConfig::Distributed(d) => {
            if control.parallel_replicates {
                log::warn!("replicates share one worker pool and run one at a time");
            }
            let mut coordinator = Coordinator::new(d.coordinator_config());
            let addr = coordinator
                .listen(d.listen.as_str())
                .map_err(|e| CliError::Runtime(format!("cannot listen on {}: {e}", d.listen)))?;
            coordinator.register_problem(config.problem.clone());
            log::info!("waiting for {} worker(s) on {addr}", d.min_workers);
            let joined = coordinator
                .wait_for_workers(d.min_workers, Duration::from_secs_f64(d.wait_for_workers_s));
            if joined < d.min_workers {
                return Err(CliError::Runtime(format!(
                    "only {joined} of {} workers joined within {} s",
                    d.min_workers, d.wait_for_workers_s
                )));
            }
            let outcomes = (1..=config.replicates)
                .map(|r| replicate(r, &mut coordinator))
                .collect::<Result<_, _>>()?;
            coordinator.shutdown();
            outcomes
        }
    };

    let replicates: Vec<ReplicateSummary> = outcomes.into_iter().flatten().collect();
    let complete = replicates.len() == config.replicates as usize
        && replicates
            .iter()
            .all(|r| r.error.as_deref() != Some(CANCELLED));
    let traces = replicates.iter().map(|r| dir.join(&r.trace_file)).collect();
    let summary = ExperimentSummary {
        problem: config.problem.clone(),
        algorithm: config.algorithm,
        seed_base: config.seed_base,
        replicates_requested: config.replicates,
        complete,
        converged: replicates.iter().filter(|r| r.converged).count() as u32,
        stats: metric_stats(&replicates),
        replicates,
    };
    let summary_path = dir.join(SUMMARY_FILE);
    write_json(&summary_path, &summary)?;
    Ok(ResultFiles {
        output_dir: dir.clone(),
        traces,
        summary_path,
        summary,
    })
}

fn run_replicate(
    config: &ExperimentConfig,
    problem: &dyn Problem,
    evaluator: &mut dyn Evaluator,
    seed: u64,
    options: &RunOptions,
) -> ReplicateResult {
    match config.algorithm {
        Algorithm::Ga => ga_run_with(&config.ga, problem, evaluator, seed, options),
        Algorithm::Random => random_search_run(
            config.random_budget(),
            config.random_block_size(),
            problem,
            evaluator,
            seed,
            options,
        ),
        Algorithm::OnePlusOne => one_plus_one_online_run(
            problem,
            config.one_plus_one.windows,
            config.one_plus_one.window_evals,
            seed,
            evaluator,
            options,
        ),
    }
}

fn metric_stats(replicates: &[ReplicateSummary]) -> BTreeMap<String, Summary> {
    type Column = (&'static str, fn(&ReplicateSummary) -> f64);
    let columns: [Column; 4] = [
        ("best_fitness", |r| r.best_fitness),
        ("generations", |r| r.generations as f64),
        ("total_evaluations", |r| r.total_evaluations as f64),
        ("total_wall_ms", |r| r.total_wall_ms as f64),
    ];
    columns
        .into_iter()
        .filter_map(|(name, get)| {
            let values: Vec<f64> = replicates.iter().map(get).collect();
            describe(&values).ok().map(|s| (name.to_string(), s))
        })
        .collect()
}

fn write_trace(path: &Path, replicate: u32, result: &ReplicateResult) -> Result<(), CliError> {
    let io_err = |e: &dyn std::fmt::Display| {
        CliError::Runtime(format!("cannot write {}: {e}", path.display()))
    };
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(&e))?;
    for g in &result.trace {
        let telemetry = g.telemetry.as_ref();
        writer
            .serialize(TraceRow {
                replicate,
                generation: g.generation,
                best_fitness: g.best_fitness,
                mean_fitness: g.mean_fitness,
                evaluations: g.evaluations_so_far,
                wall_ms: g.wall_ms,
                cpu_temp_milli_c: telemetry.and_then(|t| t.cpu_temp_milli_c),
                mem_available_bytes: telemetry.and_then(|t| t.mem_available_bytes),
                throttled_now: telemetry.and_then(|t| t.throttle).map(|f| f.throttled_now),
            })
            .map_err(|e| io_err(&e))?;
    }
    if result.trace.is_empty() {
        writer.write_record(TRACE_HEADER).map_err(|e| io_err(&e))?;
    }
    writer.flush().map_err(|e| io_err(&e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(&e))?;
    let header = reader.headers().map_err(|e| err(&e))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(err(&"unexpected trace header"));
    }
    reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| err(&e))
}

pub fn read_summary(path: &Path) -> Result<ExperimentSummary, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::from_json(
            r#"{"problem":{"type":"string-search","target":"ab"},"algorithm":"ga","replicates":3,
                "ga":{"population_size":10}}"#,
        )
        .unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn tiny_run_writes_three_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let files = run_experiment(&tiny(dir.path()), &RunControl::default()).unwrap();
        assert_eq!(files.traces.len(), 3);
        assert!(files.traces.iter().all(|t| t.exists()));
        assert_eq!(files.summary.replicates.len(), 3);
        assert!(files.summary.complete);
        assert_eq!(files.summary.converged, 3);
        assert_eq!(read_summary(&files.summary_path).unwrap(), files.summary);
        let first_line = fs::read_to_string(&files.traces[0])
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(
            first_line,
            "replicate,generation,best_fitness,mean_fitness,evaluations,wall_ms,cpu_temp_milli_c,mem_available_bytes,throttled_now"
        );
    }

    #[test]
    fn summary_matches_trace_aggregates() {
        let dir = tempfile::tempdir().unwrap();
        let files = run_experiment(&tiny(dir.path()), &RunControl::default()).unwrap();
        for (r, path) in files.summary.replicates.iter().zip(&files.traces) {
            let rows = read_trace(path).unwrap();
            assert!(rows.iter().all(|row| row.replicate == r.replicate));
            assert!(rows
                .windows(2)
                .all(|w| w[1].generation == w[0].generation + 1));
            let last = rows.last().unwrap();
            assert_eq!(last.generation, r.generations);
            assert_eq!(last.evaluations, r.total_evaluations);
            let best = rows
                .iter()
                .map(|row| row.best_fitness)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(best, r.best_fitness);
        }
        let gens: Vec<f64> = files
            .summary
            .replicates
            .iter()
            .map(|r| r.generations as f64)
            .collect();
        assert_eq!(files.summary.stats["generations"], describe(&gens).unwrap());
    }

    #[test]
    fn telemetry_rows_follow_the_schedule() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(dir.path());
        c.problem = ProblemDef::StringSearch {
            target: "abcdefgh".into(),
        };
        c.replicates = 1;
        c.ga.max_generations = 25;
        c.telemetry_every_n_generations = 10;
        let files = run_experiment(&c, &RunControl::default()).unwrap();
        let text = fs::read_to_string(&files.traces[0]).unwrap();
        for (i, line) in text.lines().skip(1).enumerate() {
            let telemetry_cells = line.split(',').skip(6).collect::<Vec<_>>();
            assert_eq!(telemetry_cells.len(), 3);
            if i % 10 != 0 {
                assert!(
                    telemetry_cells.iter().all(|c| c.is_empty()),
                    "row {i}: {line}"
                );
            }
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let seq = run_experiment(&tiny(a.path()), &RunControl::default()).unwrap();
        let par = run_experiment(
            &tiny(b.path()),
            &RunControl {
                parallel_replicates: true,
                ..RunControl::default()
            },
        )
        .unwrap();
        let strip = |s: &ExperimentSummary| {
            let mut s = s.clone();
            s.replicates.iter_mut().for_each(|r| r.total_wall_ms = 0);
            s.stats.remove("total_wall_ms");
            s
        };
        assert_eq!(strip(&seq.summary), strip(&par.summary));
    }

    #[test]
    fn cancelled_before_start_writes_empty_summary() {
        let dir = tempfile::tempdir().unwrap();
        let control = RunControl {
            cancel: Some(Arc::new(AtomicBool::new(true))),
            ..RunControl::default()
        };
        let files = run_experiment(&tiny(dir.path()), &control).unwrap();
        assert!(!files.summary.complete);
        assert!(files.summary.replicates.is_empty());
        assert!(files.summary.stats.is_empty());
        assert!(files.summary_path.exists());
    }

    #[test]
    fn unwritable_output_dir_is_a_runtime_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let mut c = tiny(&blocker.join("sub"));
        c.replicates = 1;
        let err = run_experiment(&c, &RunControl::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn other_algorithms_write_traces() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(dir.path());
        c.problem = ProblemDef::lb_sim();
        c.algorithm = Algorithm::OnePlusOne;
        c.one_plus_one.windows = 20;
        let files = run_experiment(&c, &RunControl::default()).unwrap();
        assert!(files
            .summary
            .replicates
            .iter()
            .all(|r| r.total_evaluations == 21));

        c.algorithm = Algorithm::Random;
        c.random.budget_evaluations = Some(95);
        c.random.block_size = Some(10);
        let files = run_experiment(&c, &RunControl::default()).unwrap();
        for path in &files.traces {
            let rows = read_trace(path).unwrap();
            assert_eq!(rows.len(), 10);
            assert_eq!(rows.last().unwrap().evaluations, 95);
        }
    }
}

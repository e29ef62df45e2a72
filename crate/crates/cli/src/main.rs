use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use insitu_cli::compare::Metric;
use insitu_cli::{
    compare, emit_boxplot_svg, load_config, load_metric, run_experiment, CliError, RunControl,
};
use insitu_core::dist::{worker_run, Backoff, WorkerOptions, COORDINATOR_ENV};
use insitu_core::telemetry::sample_host;
use insitu_core::ProblemRegistry;

#[derive(Parser)]
#[command(
    name = "insitu",
    version,
    about = "Seeded evolutionary search experiments on small devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replicate of an experiment config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `replicates` from the config.
        #[arg(long)]
        replicates: Option<u32>,
        /// Run local replicates on all cores.
        #[arg(long)]
        parallel_replicates: bool,
    },
    /// Join a coordinator's worker pool and evaluate until told to stop.
    Worker {
        /// host:port of the coordinator.
        #[arg(long, env = COORDINATOR_ENV)]
        coordinator: Option<String>,
        #[arg(long)]
        name: Option<String>,
        /// Give up after this many failed connection attempts; 0 retries forever.
        #[arg(long, default_value_t = 10)]
        max_attempts: u32,
    },
    /// Rank-test one metric between two summary files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// generations, best_fitness or total_wall_ms.
        #[arg(long, default_value = "generations")]
        metric: String,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Draw one box per summary file.
    Plot {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value = "generations")]
        metric: String,
    },
    /// Print one host telemetry snapshot as JSON.
    Telemetry,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            output_dir,
            replicates,
            parallel_replicates,
        } => {
            let mut config = load_config(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            if let Some(r) = replicates {
                config.replicates = r;
            }
            let cancel = Arc::new(AtomicBool::new(false));
            let flag = cancel.clone();
            ctrlc::set_handler(move || {
                if flag.swap(true, Ordering::Relaxed) {
                    std::process::exit(130);
                }
                eprintln!("interrupted; finishing the current generation and writing results");
            })
            .map_err(|e| CliError::Runtime(format!("cannot install signal handler: {e}")))?;
            let control = RunControl {
                parallel_replicates,
                cancel: Some(cancel.clone()),
            };
            let files = run_experiment(&config, &control)?;
            let s = &files.summary;
            println!(
                "{} of {} replicates finished, {} converged; summary in {}",
                s.replicates.len(),
                s.replicates_requested,
                s.converged,
                files.summary_path.display()
            );
            if let Some(failed) = s.failures().next() {
                return Err(CliError::Runtime(format!(
                    "replicate {} failed: {}",
                    failed.replicate,
                    failed.error.as_deref().unwrap_or_default()
                )));
            }
            if !s.complete {
                return Err(CliError::Runtime(
                    "run interrupted; partial results written".into(),
                ));
            }
            Ok(())
        }
        Command::Worker {
            coordinator,
            name,
            max_attempts,
        } => {
            let addr = coordinator
                .filter(|a| !a.trim().is_empty())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "no coordinator address: pass --coordinator or set {COORDINATOR_ENV}"
                    ))
                })?;
            let mut options = WorkerOptions::default();
            if let Some(name) = name {
                options.name = name;
            }
            let backoff = Backoff {
                max_attempts: (max_attempts > 0).then_some(max_attempts),
                ..Backoff::default()
            };
            worker_run(
                &addr,
                &mut ProblemRegistry::with_builtins(),
                &options,
                &backoff,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))
        }
        Command::Compare {
            a,
            b,
            metric,
            alpha,
            report,
        } => {
            let metric: Metric = metric.parse()?;
            let result = compare(
                &load_metric(&a, metric)?,
                &load_metric(&b, metric)?,
                metric,
                alpha,
            )?;
            print!("{}", result.to_text());
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&result).expect("serializable");
                std::fs::write(&path, text + "\n").map_err(|e| {
                    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            Ok(())
        }
        Command::Plot {
            summaries,
            out,
            metric,
        } => {
            let metric: Metric = metric.parse()?;
            let sets = summaries
                .iter()
                .map(|p| load_metric(p, metric))
                .collect::<Result<Vec<_>, _>>()?;
            emit_boxplot_svg(&sets, &out)
        }
        Command::Telemetry => {
            println!(
                "{}",
                serde_json::to_string_pretty(&sample_host()).expect("serializable")
            );
            Ok(())
        }
    }
}

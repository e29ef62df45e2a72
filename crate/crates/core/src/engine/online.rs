use super::{
    evaluate_batch, Clock, EvalError, Evaluator, GenerationRecord, ReplicateResult, RunOptions,
};
use crate::genome::{mutate_one_locus, random_genome, Genome};
use crate::problems::Problem;
use crate::rng::RngState;

/// (1+1)-online EA: one champion, one mutated challenger per window.
///
/// The challenger replaces the champion when its fitness is no worse. A
/// genome's fitness for a window is the mean of `window_evals` evaluations.
/// The champion is not re-evaluated. The trace has a row for the initial
/// champion followed by one row per window; `mean_fitness` there is the mean
/// of the two genomes compared.
pub fn one_plus_one_online_run(
    problem: &dyn Problem,
    total_windows: u64,
    window_evals: usize,
    seed: u64,
    evaluator: &mut dyn Evaluator,
    options: &RunOptions,
) -> ReplicateResult {
    assert!(total_windows >= 1, "need at least one window");
    assert!(window_evals >= 1, "need at least one evaluation per window");
    let clock = Clock::start();
    let mut rng = RngState::from_seed(seed);
    let spec = problem.genome_spec();

    let window_fitness = |g: &Genome, evaluator: &mut dyn Evaluator| -> Result<f64, EvalError> {
        let batch = vec![g.clone(); window_evals];
        let evals = evaluate_batch(evaluator, problem, &batch)?;
        Ok(evals.iter().map(|e| e.fitness).sum::<f64>() / window_evals as f64)
    };

    let mut champion = random_genome(spec, &mut rng);
    let mut trace = Vec::new();
    let mut champion_fitness = match window_fitness(&champion, evaluator) {
        Ok(f) => f,
        Err(e) => {
            return ReplicateResult {
                seed,
                converged: false,
                generations: 0,
                total_evaluations: 0,
                total_wall_ms: clock.ms(),
                best_genome: champion,
                best_fitness: f64::INFINITY,
                trace,
                error: Some(e.to_string()),
            }
        }
    };
    let mut evaluations = window_evals as u64;
    trace.push(GenerationRecord {
        generation: 0,
        best_fitness: champion_fitness,
        mean_fitness: champion_fitness,
        evaluations_so_far: evaluations,
        wall_ms: clock.ms(),
        telemetry: options.telemetry_for(0),
    });

    let target = problem.target_fitness();
    let mut windows = 0u64;
    let mut error = None;
    while windows < total_windows {
        if options.cancelled() {
            error = Some("cancelled".to_string());
            break;
        }
        let challenger = mutate_one_locus(&champion, spec, &mut rng);
        let challenger_fitness = match window_fitness(&challenger, evaluator) {
            Ok(f) => f,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        evaluations += window_evals as u64;
        windows += 1;
        let compared_mean = (champion_fitness + challenger_fitness) / 2.0;
        if challenger_fitness <= champion_fitness {
            champion = challenger;
            champion_fitness = challenger_fitness;
        }
        trace.push(GenerationRecord {
            generation: windows,
            best_fitness: champion_fitness,
            mean_fitness: compared_mean,
            evaluations_so_far: evaluations,
            wall_ms: clock.ms(),
            telemetry: options.telemetry_for(windows),
        });
    }

    ReplicateResult {
        seed,
        converged: target.is_some_and(|t| champion_fitness <= t),
        generations: windows,
        total_evaluations: evaluations,
        total_wall_ms: clock.ms(),
        best_genome: champion,
        best_fitness: champion_fitness,
        trace,
        error,
    }
}

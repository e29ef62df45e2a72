use super::{
    evaluate_batch, mean, Clock, Evaluator, GenerationRecord, ReplicateResult, RunOptions,
};
use crate::genome::random_genome;
use crate::problems::Problem;
use crate::rng::RngState;

/// Uniform random sampling with a fixed evaluation budget.
///
/// Genomes are drawn and evaluated in blocks of `block_size` (the paired
/// GA's population size, for comparable traces); one trace row is written per
/// block. Sampling stops early once the problem's known optimum is hit.
pub fn random_search_run(
    budget_evaluations: u64,
    block_size: usize,
    problem: &dyn Problem,
    evaluator: &mut dyn Evaluator,
    seed: u64,
    options: &RunOptions,
) -> ReplicateResult {
    assert!(
        budget_evaluations >= 1,
        "random search needs a budget of at least 1"
    );
    assert!(block_size >= 1, "block size must be positive");
    let clock = Clock::start();
    let mut rng = RngState::from_seed(seed);
    let spec = problem.genome_spec();
    let target = problem.target_fitness();

    let mut best: Option<(f64, crate::genome::Genome)> = None;
    let mut evaluations = 0u64;
    let mut blocks = 0u64;
    let mut trace = Vec::new();
    let mut error = None;

    while evaluations < budget_evaluations {
        if options.cancelled() {
            error = Some("cancelled".to_string());
            break;
        }
        let n = (budget_evaluations - evaluations).min(block_size as u64) as usize;
        let genomes: Vec<_> = (0..n).map(|_| random_genome(spec, &mut rng)).collect();
        let evals = match evaluate_batch(evaluator, problem, &genomes) {
            Ok(e) => e,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        for (g, e) in genomes.into_iter().zip(&evals) {
            if best.as_ref().is_none_or(|(b, _)| e.fitness < *b) {
                best = Some((e.fitness, g));
            }
        }
        evaluations += n as u64;
        let best_fitness = best.as_ref().map(|(f, _)| *f).expect("block is non-empty");
        trace.push(GenerationRecord {
            generation: blocks,
            best_fitness,
            mean_fitness: mean(evals.iter().map(|e| e.fitness)),
            evaluations_so_far: evaluations,
            wall_ms: clock.ms(),
            telemetry: options.telemetry_for(blocks),
        });
        blocks += 1;
        if target.is_some_and(|t| best_fitness <= t) {
            break;
        }
    }

    let (best_fitness, best_genome) =
        best.unwrap_or((f64::INFINITY, crate::genome::Genome::new(Vec::new())));
    ReplicateResult {
        seed,
        converged: target.is_some_and(|t| best_fitness <= t),
        generations: blocks,
        total_evaluations: evaluations,
        total_wall_ms: clock.ms(),
        best_genome,
        best_fitness,
        trace,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{CountingEvaluator, LocalEvaluator};
    use crate::genome::{Genome, GenomeSpec};
    use crate::problems::StringSearchProblem;

    #[test]
    fn budget_of_one() {
        let problem = StringSearchProblem::default();
        let r = random_search_run(
            1,
            500,
            &problem,
            &mut LocalEvaluator,
            4,
            &RunOptions::default(),
        );
        let mut rng = RngState::from_seed(4);
        let only = random_genome(problem.genome_spec(), &mut rng);
        assert_eq!(r.best_genome, only);
        assert_eq!(r.best_fitness, problem.fitness(&only));
        assert_eq!(r.total_evaluations, 1);
        assert_eq!(r.trace.len(), 1);
    }

    struct Forced(GenomeSpec);
    impl Problem for Forced {
        fn id(&self) -> &str {
            "forced"
        }
        fn genome_spec(&self) -> &GenomeSpec {
            &self.0
        }
        fn fitness(&self, g: &Genome) -> f64 {
            g.genes()[0] as f64
        }
    }

    #[test]
    fn singleton_domain() {
        let problem = Forced(GenomeSpec::uniform(1, 9, 9));
        let r = random_search_run(
            50,
            7,
            &problem,
            &mut LocalEvaluator,
            1,
            &RunOptions::default(),
        );
        assert_eq!(r.best_fitness, 9.0);
        assert_eq!(r.total_evaluations, 50);
        assert_eq!(r.generations, 8);
        assert_eq!(r.trace.last().unwrap().evaluations_so_far, 50);
    }

    #[test]
    fn counts_every_evaluation() {
        let problem = StringSearchProblem::default();
        let mut counter = CountingEvaluator::new(LocalEvaluator);
        let r = random_search_run(1234, 100, &problem, &mut counter, 2, &RunOptions::default());
        assert_eq!(r.total_evaluations, 1234);
        assert_eq!(counter.genomes(), 1234);
        let bests: Vec<f64> = r.trace.iter().map(|t| t.best_fitness).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    }
}

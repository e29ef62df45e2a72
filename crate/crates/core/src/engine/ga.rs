use serde::{Deserialize, Serialize};

use super::{
    evaluate_batch, mean, Clock, EvalError, Evaluator, GenerationRecord, ReplicateResult,
    RunOptions,
};
use crate::genome::{
    mutate_in_place, random_genome, single_point_crossover, Individual, Population,
};
use crate::problems::Problem;
use crate::rng::RngState;

/// Generational GA parameters. Defaults are the 500 x 500,000 string-search
/// setup with one elite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub max_generations: u64,
    pub elitism: usize,
    /// Stop once the best fitness reaches this value. `None` defers to the
    /// problem's known optimum, if any.
    pub target_fitness: Option<f64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 500,
            crossover_rate: 0.5,
            mutation_rate: 1.0,
            max_generations: 500_000,
            elitism: 1,
            target_fitness: None,
        }
    }
}

impl GaConfig {
    /// Returns the name of the first offending field with a reason.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.population_size < 2 {
            return Err(("population_size", "must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(("crossover_rate", "must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(("mutation_rate", "must lie in [0, 1]".into()));
        }
        if self.elitism >= self.population_size {
            return Err(("elitism", "must be smaller than population_size".into()));
        }
        Ok(())
    }

    fn target(&self, problem: &dyn Problem) -> Option<f64> {
        self.target_fitness.or_else(|| problem.target_fitness())
    }
}

/// Roulette selection for minimisation.
///
/// Member `i` has weight `1 / (1 + f_i)`; one uniform draw is scaled by the
/// total weight and located in the cumulative weight array.
pub fn select_parent_weighted(fitnesses: &[f64], rng: &mut RngState) -> usize {
    let cumulative = cumulative_weights(fitnesses);
    pick(&cumulative, rng)
}

fn cumulative_weights(fitnesses: &[f64]) -> Vec<f64> {
    assert!(!fitnesses.is_empty(), "selection from an empty population");
    let mut acc = 0.0;
    fitnesses
        .iter()
        .map(|f| {
            acc += 1.0 / (1.0 + f);
            acc
        })
        .collect()
}

#[inline]
fn pick(cumulative: &[f64], rng: &mut RngState) -> usize {
    let total = *cumulative.last().expect("non-empty");
    let x = rng.next_f64() * total;
    cumulative
        .partition_point(|&c| c <= x)
        .min(cumulative.len() - 1)
}

/// Mutable state of one GA replicate between generations.
#[derive(Clone, Debug)]
pub struct GaState {
    pub population: Population,
    pub rng: RngState,
    pub evaluations: u64,
}

/// Random initial population, fully evaluated. Returns the generation-0 record.
pub fn initial_population(
    config: &GaConfig,
    problem: &dyn Problem,
    evaluator: &mut dyn Evaluator,
    seed: u64,
) -> Result<(GaState, GenerationRecord), EvalError> {
    let mut rng = RngState::from_seed(seed);
    let spec = problem.genome_spec();
    let genomes: Vec<_> = (0..config.population_size)
        .map(|_| random_genome(spec, &mut rng))
        .collect();
    let evals = evaluate_batch(evaluator, problem, &genomes)?;
    let members = genomes
        .into_iter()
        .zip(evals)
        .map(|(g, e)| {
            let mut ind = Individual::unevaluated(g);
            ind.set_evaluation(e.fitness, e.eval_ms, e.evaluated_by);
            ind
        })
        .collect();
    let state = GaState {
        population: Population {
            members,
            generation: 0,
        },
        rng,
        evaluations: config.population_size as u64,
    };
    let record = record_for(&state);
    Ok((state, record))
}

fn record_for(state: &GaState) -> GenerationRecord {
    let fitnesses = state.population.fitnesses();
    GenerationRecord {
        generation: state.population.generation,
        best_fitness: fitnesses.iter().copied().fold(f64::INFINITY, f64::min),
        mean_fitness: mean(fitnesses.iter().copied()),
        evaluations_so_far: state.evaluations,
        wall_ms: 0,
        telemetry: None,
    }
}

/// Produces the next generation.
///
/// Elites are copied first (best fitness, ties to the lower index). The rest
/// is filled pair by pair: two weighted selections, one draw for the
/// crossover trial (plus the cut draw when it succeeds), then one draw per
/// child for its mutation trial (plus two when it succeeds). The last child
/// is dropped if the population would overflow. Only new individuals are
/// evaluated.
pub fn ga_step(
    state: &mut GaState,
    config: &GaConfig,
    problem: &dyn Problem,
    evaluator: &mut dyn Evaluator,
) -> Result<GenerationRecord, EvalError> {
    let spec = problem.genome_spec();
    let pop = &state.population;
    let size = config.population_size;
    let rng = &mut state.rng;
    let fitnesses = pop.fitnesses();

    let mut ranked: Vec<usize> = (0..pop.len()).collect();
    ranked.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(a.cmp(&b)));
    let mut next: Vec<Individual> = ranked
        .iter()
        .take(config.elitism)
        .map(|&i| pop.members[i].clone())
        .collect();
    let elites = next.len();

    let cumulative = cumulative_weights(&fitnesses);
    let mut children = Vec::with_capacity(size - elites + 1);
    while elites + children.len() < size {
        let a = &pop.members[pick(&cumulative, rng)].genome;
        let b = &pop.members[pick(&cumulative, rng)].genome;
        let crossover = rng.next_f64() < config.crossover_rate;
        let (mut c1, mut c2) = if crossover && a.len() >= 2 {
            single_point_crossover(a, b, rng)
        } else {
            (a.clone(), b.clone())
        };
        for child in [&mut c1, &mut c2] {
            if rng.next_f64() < config.mutation_rate {
                mutate_in_place(child, spec, rng);
            }
        }
        children.push(c1);
        children.push(c2);
    }
    children.truncate(size - elites);

    let evals = evaluate_batch(evaluator, problem, &children)?;
    next.extend(children.into_iter().zip(evals).map(|(g, e)| {
        let mut ind = Individual::unevaluated(g);
        ind.set_evaluation(e.fitness, e.eval_ms, e.evaluated_by);
        ind
    }));

    state.evaluations += (size - elites) as u64;
    state.population = Population {
        members: next,
        generation: pop.generation + 1,
    };
    Ok(record_for(state))
}

pub fn ga_run(
    config: &GaConfig,
    problem: &dyn Problem,
    evaluator: &mut dyn Evaluator,
    seed: u64,
) -> ReplicateResult {
    ga_run_with(config, problem, evaluator, seed, &RunOptions::default())
}

/// Runs until the target fitness is reached or `max_generations` steps have
/// been taken. Evaluator failures and cancellation end the run early with
/// `error` set and the partial trace kept.
pub fn ga_run_with(
    config: &GaConfig,
    problem: &dyn Problem,
    evaluator: &mut dyn Evaluator,
    seed: u64,
    options: &RunOptions,
) -> ReplicateResult {
    if let Err((field, reason)) = config.validate() {
        panic!("invalid GA config: {field} {reason}");
    }
    let clock = Clock::start();
    let target = config.target(problem);
    let reached = |f: f64| target.is_some_and(|t| f <= t);
    let mut trace = Vec::new();

    let (mut state, mut record) = match initial_population(config, problem, evaluator, seed) {
        Ok(v) => v,
        Err(e) => {
            return ReplicateResult {
                seed,
                converged: false,
                generations: 0,
                total_evaluations: 0,
                total_wall_ms: clock.ms(),
                best_genome: crate::genome::Genome::new(Vec::new()),
                best_fitness: f64::INFINITY,
                trace,
                error: Some(e.to_string()),
            }
        }
    };
    record.wall_ms = clock.ms();
    record.telemetry = options.telemetry_for(0);
    let mut best = record.best_fitness;
    trace.push(record);

    let mut error = None;
    while !reached(best) && state.population.generation < config.max_generations {
        if options.cancelled() {
            error = Some("cancelled".to_string());
            break;
        }
        match ga_step(&mut state, config, problem, evaluator) {
            Ok(mut record) => {
                record.wall_ms = clock.ms();
                record.telemetry = options.telemetry_for(record.generation);
                best = best.min(record.best_fitness);
                trace.push(record);
            }
            Err(e) => {
                log::warn!("replicate {seed} aborted: {e}");
                error = Some(e.to_string());
                break;
            }
        }
    }

    let best_index = state
        .population
        .best_index()
        .expect("population is evaluated");
    let best_member = &state.population.members[best_index];
    let best_fitness = best_member.fitness().expect("evaluated");
    ReplicateResult {
        seed,
        converged: reached(best_fitness),
        generations: state.population.generation,
        total_evaluations: state.evaluations,
        total_wall_ms: clock.ms(),
        best_genome: best_member.genome.clone(),
        best_fitness,
        trace,
        error,
    }
}

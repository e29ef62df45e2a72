use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use insitu_core::engine::{ga_step, initial_population, GaConfig, LocalEvaluator};
use insitu_core::genome::random_genome;
use insitu_core::problems::{
    string_fitness, LbSimProblem, Problem, StringSearchProblem, DEFAULT_TARGET,
};
use insitu_core::RngState;

fn fitness(c: &mut Criterion) {
    let problem = StringSearchProblem::default();
    let genome = random_genome(problem.genome_spec(), &mut RngState::from_seed(1));
    c.bench_function("string_fitness/84", |b| {
        b.iter(|| string_fitness(black_box(&genome), DEFAULT_TARGET))
    });

    let lb = LbSimProblem::default();
    let genome = random_genome(lb.genome_spec(), &mut RngState::from_seed(1));
    c.bench_function("lb_fitness/default", |b| {
        b.iter(|| lb.fitness(black_box(&genome)))
    });
}

fn generation(c: &mut Criterion) {
    let problem = StringSearchProblem::default();
    let config = GaConfig::default();
    let (state, _) = initial_population(&config, &problem, &mut LocalEvaluator, 1).unwrap();
    c.bench_function("ga_step/pop500", |b| {
        b.iter_batched(
            || state.clone(),
            |mut s| ga_step(&mut s, &config, &problem, &mut LocalEvaluator).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, fitness, generation);
criterion_main!(benches);

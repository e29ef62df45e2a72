use insitu_core::engine::{
    ga_run, one_plus_one_online_run, random_search_run, CountingEvaluator, GaConfig,
    LocalEvaluator, RunOptions,
};
use insitu_core::problems::{LbSimProblem, StringSearchProblem};

const STRING_GOLDEN: &str = "\
seed=1 converged=false generations=10 evaluations=5490 best=2009.0 error=None
genome=[60, 89, 49, 91, 45, 37, 78, 62, 119, 33, 65, 87, 95, 112, 71, 94, 111, 105, 66, 48, 118, 108, 98, 103, 61, 46, 54, 110, 103, 116, 116, 65, 62, 58, 124, 62, 86, 76, 110, 110, 63, 44, 57, 91, 89, 120, 101, 115, 63, 44, 112, 65, 34, 108, 45, 98, 84, 103, 78, 99, 39, 106, 104, 114, 76, 119, 119, 37, 53, 119, 99, 68, 65, 112, 37, 124, 73, 121, 104, 81, 91, 59, 77, 48]
0,2290.0,2840.76,500
1,2218.0,2823.678,999
2,2167.0,2797.1,1498
3,2167.0,2773.388,1997
4,2085.0,2745.502,2496
5,2085.0,2745.056,2995
6,2085.0,2727.162,3494
7,2040.0,2703.354,3993
8,2040.0,2696.002,4492
9,2038.0,2668.57,4991
10,2009.0,2642.312,5490
";

const LB_GOLDEN: &str = "\
seed=42 converged=false generations=5 evaluations=115 best=0.03552840016535762 error=None
genome=[30, 0, 14, 0]
0,0.4504286599069207,0.8998711552400949,20
1,0.42805250471795075,0.8858039829995027,39
2,0.42805250471795075,0.8446301305517625,58
3,0.03552840016535762,0.7392465686151248,77
4,0.03552840016535762,0.8068762403831435,96
5,0.03552840016535762,0.748639356756944,115
";

#[test]
fn ten_generations_match_golden_trace() {
    let cfg = GaConfig {
        max_generations: 10,
        ..GaConfig::default()
    };
    let run = ga_run(
        &cfg,
        &StringSearchProblem::default(),
        &mut LocalEvaluator,
        1,
    );
    assert_eq!(run.logical_digest(), STRING_GOLDEN);
}

#[test]
fn lb_ga_matches_golden_trace() {
    let cfg = GaConfig {
        population_size: 20,
        max_generations: 5,
        ..GaConfig::default()
    };
    let run = ga_run(&cfg, &LbSimProblem::default(), &mut LocalEvaluator, 42);
    assert_eq!(run.logical_digest(), LB_GOLDEN);
}

#[test]
fn budget_matched_generation_count() {
    let cfg = GaConfig {
        max_generations: 500,
        ..GaConfig::default()
    };
    let problem = StringSearchProblem::default();
    let mut counter = CountingEvaluator::new(LocalEvaluator);
    let run = ga_run(&cfg, &problem, &mut counter, 3);
    assert_eq!(run.total_evaluations, 250_000);
    assert_eq!(counter.genomes(), 250_000);
    assert_eq!(counter.batches(), 501);
    let trace_best: Vec<f64> = run.trace.iter().map(|r| r.best_fitness).collect();
    assert!(
        trace_best.windows(2).all(|w| w[1] <= w[0]),
        "elitism keeps best monotone"
    );

    let random = random_search_run(
        250_000,
        500,
        &problem,
        &mut LocalEvaluator,
        3,
        &RunOptions::default(),
    );
    assert_eq!(random.total_evaluations, 250_000);
    assert_eq!(random.trace.len(), 500);
    assert!(run.best_fitness < random.best_fitness);
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = GaConfig {
        population_size: 60,
        max_generations: 40,
        ..GaConfig::default()
    };
    let problem = StringSearchProblem::new("determinism").unwrap();
    let a = ga_run(&cfg, &problem, &mut LocalEvaluator, 99);
    let b = ga_run(&cfg, &problem, &mut LocalEvaluator, 99);
    assert_eq!(a.logical_digest(), b.logical_digest());
    let c = ga_run(&cfg, &problem, &mut LocalEvaluator, 100);
    assert_ne!(a.logical_digest(), c.logical_digest());
}

#[test]
fn online_lb_never_regresses() {
    let problem = LbSimProblem::default();
    for seed in 1..=5 {
        let run = one_plus_one_online_run(
            &problem,
            200,
            1,
            seed,
            &mut LocalEvaluator,
            &RunOptions::default(),
        );
        assert_eq!(run.total_evaluations, 201);
        let best: Vec<f64> = run.trace.iter().map(|r| r.best_fitness).collect();
        assert_eq!(best.len(), 201);
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(run.best_fitness, *best.last().unwrap());
    }
}

#[test]
fn telemetry_attached_on_schedule() {
    let cfg = GaConfig {
        population_size: 10,
        max_generations: 25,
        ..GaConfig::default()
    };
    let options = RunOptions {
        telemetry_every: Some(10),
        ..RunOptions::default()
    };
    let run = insitu_core::ga_run_with(
        &cfg,
        &StringSearchProblem::new("xy").unwrap(),
        &mut LocalEvaluator,
        5,
        &options,
    );
    for r in &run.trace {
        assert_eq!(
            r.telemetry.is_some(),
            r.generation % 10 == 0,
            "generation {}",
            r.generation
        );
    }
}

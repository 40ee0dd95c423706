use suitegen::engines::{
    genetic_algorithm, hill_climb, write_stats_csv, GeneticConfig, HillClimberConfig,
};
use suitegen::evaluate::BuiltinEvaluator;
use suitegen::fitness::{FitnessConfig, FitnessKind};
use suitegen::fixtures::{bmi_metadata, bmi_program};

fn evaluator(kind: FitnessKind) -> BuiltinEvaluator {
    BuiltinEvaluator::new(bmi_program(), bmi_metadata(), FitnessConfig::with_kind(kind)).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    (xs[(xs.len() - 1) / 2] + xs[xs.len() / 2]) / 2.0
}

#[test]
fn hill_climber_improves_on_initial_suite() {
    let meta = bmi_metadata();
    let ev = evaluator(FitnessKind::Statement);
    let (mut initial, mut best) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let cfg = HillClimberConfig { seed, ..Default::default() };
        let r = hill_climb(&cfg, &meta, &ev).unwrap();
        assert!(r.restarts_used <= cfg.max_restarts + 1);
        assert!(r.generations_run <= cfg.max_gen);
        initial.push(r.initial_fitness);
        best.push(r.best_fitness());
    }
    assert!(median(best.clone()) > median(initial.clone()), "{best:?} vs {initial:?}");
}

#[test]
fn genetic_algorithm_stats_replay() {
    let meta = bmi_metadata();
    let ev = evaluator(FitnessKind::Statement);
    let cfg = GeneticConfig { max_gen: 60, seed: 42, ..Default::default() };
    let csv = |r: &suitegen::engines::SearchResult| {
        let mut buf = Vec::new();
        write_stats_csv(&r.stats, &mut buf).unwrap();
        buf
    };
    let a = genetic_algorithm(&cfg, &meta, &ev).unwrap();
    let b = genetic_algorithm(&cfg, &meta, &ev).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a.best, b.best);
}

#[test]
fn branch_fitness_search_reaches_more_goals() {
    let meta = bmi_metadata();
    let ev = evaluator(FitnessKind::BranchDistance);
    let cfg = GeneticConfig { max_gen: 100, seed: 8, ..Default::default() };
    let r = genetic_algorithm(&cfg, &meta, &ev).unwrap();
    assert!(r.best_fitness() > r.initial_fitness);
    assert!(r.stats.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
    let covered = ev.assess(&r.best).unwrap().branch_coverage.unwrap();
    assert!(covered > 50.0, "{covered}");
}

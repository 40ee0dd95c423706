//! The two metaheuristics.
//!
//! Both follow the classic control flow closely: strict improvement is
//! needed to replace the current or best solution, the best-ever suite is
//! returned, and one ChaCha stream seeded from the config drives every
//! random choice so that runs replay exactly.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::evaluate::{EvalError, Evaluator};
use crate::genotype::{generate_random_suite, GenerationLimits, TestSuite};
use crate::metadata::UutMetadata;
use crate::search_ops::{mutate, tournament_select, uniform_crossover, SelectionError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillClimberConfig {
    pub max_gen: usize,
    pub max_tries: usize,
    pub max_restarts: usize,
    pub limits: GenerationLimits,
    pub seed: u64,
}

impl Default for HillClimberConfig {
    fn default() -> Self {
        Self {
            max_gen: 200,
            max_tries: 200,
            max_restarts: 5,
            limits: GenerationLimits::default(),
            seed: 0,
        }
    }
}

impl HillClimberConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_tries < 1 {
            return Err(SearchError::Config("max_tries must be at least 1".into()));
        }
        validate_limits(self.limits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneticConfig {
    pub max_gen: usize,
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub exhaustion: usize,
    pub limits: GenerationLimits,
    pub seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        Self {
            max_gen: 200,
            population_size: 20,
            tournament_size: 6,
            crossover_probability: 0.7,
            mutation_probability: 0.7,
            exhaustion: 30,
            limits: GenerationLimits::default(),
            seed: 0,
        }
    }
}

impl GeneticConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population_size == 0 || !self.population_size.is_multiple_of(2) {
            return Err(SearchError::Config(format!(
                "population size must be a positive even number, got {}",
                self.population_size
            )));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(SearchError::Config(format!(
                "tournament size must be in 1..={}, got {}",
                self.population_size, self.tournament_size
            )));
        }
        for (name, p) in [
            ("crossover", self.crossover_probability),
            ("mutation", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SearchError::Config(format!(
                    "{name} probability must be in [0, 1], got {p}"
                )));
            }
        }
        validate_limits(self.limits)
    }
}

fn validate_limits(limits: GenerationLimits) -> Result<(), SearchError> {
    if limits.max_test_cases < 1 || limits.max_actions < 1 {
        return Err(SearchError::Config(
            "max test cases and max actions must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Snapshot of the best suite at the end of a generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub num_tests: usize,
    pub avg_actions: f64,
}

impl GenerationStats {
    fn of(generation: usize, best: &TestSuite) -> Self {
        Self {
            generation,
            best_fitness: best.fitness.expect("best suite is evaluated"),
            num_tests: best.num_tests(),
            avg_actions: best.mean_actions_per_test(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: TestSuite,
    pub initial_fitness: f64,
    pub generations_run: usize,
    /// Always 0 for the genetic algorithm.
    pub restarts_used: usize,
    pub stats: Vec<GenerationStats>,
}

impl SearchResult {
    pub fn best_fitness(&self) -> f64 {
        self.best.fitness.expect("best suite is evaluated")
    }
}

pub const STATS_HEADER: &str = "generation,best_fitness,num_tests,avg_actions";

pub fn write_stats_csv<W: io::Write>(stats: &[GenerationStats], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATS_HEADER.split(','))?;
    for s in stats {
        w.write_record([
            s.generation.to_string(),
            s.best_fitness.to_string(),
            s.num_tests.to_string(),
            s.avg_actions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn evaluated<E: Evaluator + ?Sized>(suite: TestSuite, evaluator: &E) -> Result<TestSuite, SearchError> {
    let f = evaluator.evaluate(&suite)?;
    Ok(suite.with_fitness(f))
}

fn fitness(s: &TestSuite) -> f64 {
    s.fitness.expect("suite evaluated before comparison")
}

pub fn hill_climb<E: Evaluator + ?Sized>(
    config: &HillClimberConfig,
    meta: &UutMetadata,
    evaluator: &E,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let limits = config.limits;

    let mut current = evaluated(generate_random_suite(meta, limits, &mut rng), evaluator)?;
    let initial_fitness = fitness(&current);
    let mut best = current.clone();
    let mut stats = Vec::new();

    let mut gen = 1;
    let mut restarts = 0;
    while gen <= config.max_gen && restarts <= config.max_restarts {
        // Tries start at 1, so at most max_tries - 1 mutants per generation.
        let mut tries = 1;
        let mut changed = false;
        while tries < config.max_tries && !changed {
            let candidate = evaluated(mutate(&current, meta, limits, &mut rng), evaluator)?;
            if fitness(&candidate) > fitness(&current) {
                current = candidate;
                changed = true;
                if fitness(&current) > fitness(&best) {
                    best = current.clone();
                }
            }
            tries += 1;
        }
        if !changed {
            restarts += 1;
            current = evaluated(generate_random_suite(meta, limits, &mut rng), evaluator)?;
        }
        stats.push(GenerationStats::of(gen, &best));
        gen += 1;
    }

    Ok(SearchResult {
        best,
        initial_fitness,
        generations_run: gen - 1,
        restarts_used: restarts,
        stats,
    })
}

pub fn genetic_algorithm<E: Evaluator + ?Sized>(
    config: &GeneticConfig,
    meta: &UutMetadata,
    evaluator: &E,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let limits = config.limits;

    let mut population = (0..config.population_size)
        .map(|_| evaluated(generate_random_suite(meta, limits, &mut rng), evaluator))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = population[0].clone();
    let initial_fitness = fitness(&best);
    let mut stats = Vec::new();

    let mut gen = 1;
    // Signed: starts below zero so that the first generation is not counted
    // as stagnant.
    let mut stagnation: i64 = -1;
    let exhaustion = i64::try_from(config.exhaustion).unwrap_or(i64::MAX);
    while gen <= config.max_gen && stagnation <= exhaustion {
        let mut next = Vec::with_capacity(population.len());
        while next.len() < population.len() {
            let mut a = tournament_select(&population, config.tournament_size, &mut rng)?;
            let mut b = tournament_select(&population, config.tournament_size, &mut rng)?;

            if rng.gen::<f64>() < config.crossover_probability {
                (a, b) = uniform_crossover(&a, &b, &mut rng);
            }
            if rng.gen::<f64>() < config.mutation_probability {
                a = mutate(&a, meta, limits, &mut rng);
            }
            if rng.gen::<f64>() < config.mutation_probability {
                b = mutate(&b, meta, limits, &mut rng);
            }
            // Untouched copies keep their parent's score.
            for child in [&mut a, &mut b] {
                if child.fitness.is_none() {
                    child.fitness = Some(evaluator.evaluate(child)?);
                }
            }
            for child in [&a, &b] {
                if fitness(child) > fitness(&best) {
                    best = child.clone();
                    stagnation = -1;
                }
            }
            next.push(a);
            next.push(b);
        }
        debug_assert_eq!(next.len(), config.population_size);
        population = next;
        stats.push(GenerationStats::of(gen, &best));
        gen += 1;
        stagnation += 1;
    }

    Ok(SearchResult {
        best,
        initial_fitness,
        generations_run: gen - 1,
        restarts_used: 0,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::FnEvaluator;
    use crate::metadata::tests::bmi;
    use std::cell::Cell;

    /// Rewards distinct actions and penalizes size: a landscape with room to climb.
    fn toy(s: &TestSuite) -> f64 {
        let mut seen = std::collections::BTreeSet::new();
        for t in &s.tests {
            for c in &t.calls[1..] {
                seen.insert(c.action_id);
            }
        }
        seen.len() as f64 * 10.0 - s.num_tests() as f64 * 0.1 - s.mean_calls_per_test() * 0.05
    }

    #[test]
    fn zero_generations_returns_initial_suite() {
        let meta = bmi();
        let cfg = HillClimberConfig { max_gen: 0, seed: 3, ..Default::default() };
        let r = hill_climb(&cfg, &meta, &FnEvaluator(toy)).unwrap();
        assert_eq!(r.generations_run, 0);
        assert!(r.stats.is_empty());
        assert_eq!(r.best_fitness(), r.initial_fitness);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let initial = generate_random_suite(&meta, cfg.limits, &mut rng);
        assert_eq!(r.best.tests, initial.tests);
    }

    #[test]
    fn hill_climber_is_deterministic_and_monotone() {
        let meta = bmi();
        let cfg = HillClimberConfig { max_gen: 40, seed: 21, ..Default::default() };
        let a = hill_climb(&cfg, &meta, &FnEvaluator(toy)).unwrap();
        let b = hill_climb(&cfg, &meta, &FnEvaluator(toy)).unwrap();
        assert_eq!(a, b);
        assert!(a.stats.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
        assert!(a.best_fitness() >= a.initial_fitness);
    }

    #[test]
    fn hill_climber_evaluation_budget_and_restarts() {
        // A flat landscape never improves: every generation spends max_tries - 1
        // mutants plus one restart evaluation, and restarts end the search.
        let meta = bmi();
        let calls = Cell::new(0usize);
        let flat = FnEvaluator(|_: &TestSuite| {
            calls.set(calls.get() + 1);
            1.0
        });
        let cfg = HillClimberConfig { max_gen: 100, max_tries: 7, max_restarts: 2, seed: 1, ..Default::default() };
        let r = hill_climb(&cfg, &meta, &flat).unwrap();
        assert_eq!(r.restarts_used, 3);
        assert_eq!(r.generations_run, 3);
        assert_eq!(calls.get(), 1 + 3 * 7);
    }

    #[test]
    fn odd_population_rejected() {
        let cfg = GeneticConfig { population_size: 21, ..Default::default() };
        assert!(matches!(
            genetic_algorithm(&cfg, &bmi(), &FnEvaluator(toy)),
            Err(SearchError::Config(_))
        ));
        let cfg = GeneticConfig { tournament_size: 30, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = GeneticConfig { mutation_probability: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stagnation_counter_trace() {
        // Constant fitness: -1 -> 0 after generation 1, 0 -> 1 after generation 2.
        let cfg = GeneticConfig { exhaustion: 0, seed: 5, ..Default::default() };
        let r = genetic_algorithm(&cfg, &bmi(), &FnEvaluator(|_: &TestSuite| 4.0)).unwrap();
        assert_eq!(r.generations_run, 2);
        assert_eq!(r.stats.len(), 2);
    }

    #[test]
    fn disabled_exhaustion_runs_full_budget() {
        let cfg = GeneticConfig { max_gen: 25, exhaustion: 26, seed: 9, ..Default::default() };
        let r = genetic_algorithm(&cfg, &bmi(), &FnEvaluator(|_: &TestSuite| 0.0)).unwrap();
        assert_eq!(r.generations_run, 25);
        let gens: Vec<_> = r.stats.iter().map(|s| s.generation).collect();
        assert_eq!(gens, (1..=25).collect::<Vec<_>>());
    }

    #[test]
    fn no_variation_keeps_tournament_winners() {
        let meta = bmi();
        let calls = Cell::new(0usize);
        let counting = FnEvaluator(|s: &TestSuite| {
            calls.set(calls.get() + 1);
            toy(s)
        });
        let cfg = GeneticConfig {
            max_gen: 10,
            crossover_probability: 0.0,
            mutation_probability: 0.0,
            exhaustion: 100,
            seed: 2,
            ..Default::default()
        };
        let r = genetic_algorithm(&cfg, &meta, &counting).unwrap();
        // Only the initial population is ever evaluated.
        assert_eq!(calls.get(), cfg.population_size);
        assert!(r.stats.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
    }

    #[test]
    fn genetic_algorithm_improves_toy_landscape() {
        let cfg = GeneticConfig { max_gen: 60, seed: 13, ..Default::default() };
        let a = genetic_algorithm(&cfg, &bmi(), &FnEvaluator(toy)).unwrap();
        let b = genetic_algorithm(&cfg, &bmi(), &FnEvaluator(toy)).unwrap();
        assert_eq!(a, b);
        assert!(a.best_fitness() >= a.initial_fitness);
        assert!(a.stats.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
    }

    #[test]
    fn stats_csv_layout() {
        let stats = [
            GenerationStats { generation: 1, best_fitness: 63.5, num_tests: 13, avg_actions: 11.0 },
            GenerationStats { generation: 2, best_fitness: 64.25, num_tests: 12, avg_actions: 10.5 },
        ];
        let mut buf = Vec::new();
        write_stats_csv(&stats, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "generation,best_fitness,num_tests,avg_actions\n1,63.5,13,11\n2,64.25,12,10.5\n"
        );
    }
}

//! Variation and selection operators shared by both engines.
//!
//! Every operator is a pure function of its inputs and the random stream;
//! results are fresh suites with the cached fitness cleared.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::genotype::{generate_random_test, random_action, GenerationLimits, TestCase, TestSuite};
use crate::metadata::{sample_param, UutMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    AddTest,
    DeleteTest,
    AddAction,
    DeleteAction,
    ModifyAction,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::AddTest,
        MutationKind::DeleteTest,
        MutationKind::AddAction,
        MutationKind::DeleteAction,
        MutationKind::ModifyAction,
    ];
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("tournament size {k} is not in 1..={population}")]
    BadTournamentSize { k: usize, population: usize },
    #[error("population member {0} has no fitness")]
    Unevaluated(usize),
}

fn test_cap(limits: GenerationLimits) -> usize {
    2 * limits.max_test_cases
}

fn action_cap(limits: GenerationLimits) -> usize {
    2 * limits.max_actions
}

fn modifiable_calls(test: &TestCase, meta: &UutMetadata) -> Vec<usize> {
    test.calls
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_constructor() || !meta.constructor.is_empty())
        .map(|(i, _)| i)
        .collect()
}

fn eligible_tests<F: Fn(&TestCase) -> bool>(suite: &TestSuite, pred: F) -> Vec<usize> {
    suite
        .tests
        .iter()
        .enumerate()
        .filter(|(_, t)| pred(t))
        .map(|(i, _)| i)
        .collect()
}

/// Kinds that can be applied to `suite` without breaking an invariant or a
/// growth cap, in `MutationKind::ALL` order.
pub fn applicable_kinds(
    suite: &TestSuite,
    meta: &UutMetadata,
    limits: GenerationLimits,
) -> Vec<MutationKind> {
    MutationKind::ALL
        .into_iter()
        .filter(|kind| match kind {
            MutationKind::AddTest => suite.num_tests() < test_cap(limits),
            MutationKind::DeleteTest => suite.num_tests() > 1,
            MutationKind::AddAction => suite
                .tests
                .iter()
                .any(|t| t.num_actions() < action_cap(limits)),
            MutationKind::DeleteAction => suite.tests.iter().any(|t| t.num_actions() > 0),
            MutationKind::ModifyAction => suite
                .tests
                .iter()
                .any(|t| !modifiable_calls(t, meta).is_empty()),
        })
        .collect()
}

/// Applies one mutation chosen uniformly among the applicable kinds.
///
/// Returns the input unchanged (fitness cleared) only in the degenerate case
/// where nothing is applicable, which valid metadata cannot produce.
pub fn mutate<R: Rng + ?Sized>(
    suite: &TestSuite,
    meta: &UutMetadata,
    limits: GenerationLimits,
    rng: &mut R,
) -> TestSuite {
    let kinds = applicable_kinds(suite, meta, limits);
    if kinds.is_empty() {
        return TestSuite::new(suite.tests.clone());
    }
    let kind = kinds[rng.gen_range(0..kinds.len())];
    apply_mutation(kind, suite, meta, limits, rng)
}

/// Applies a specific mutation kind. The kind must be applicable.
pub fn apply_mutation<R: Rng + ?Sized>(
    kind: MutationKind,
    suite: &TestSuite,
    meta: &UutMetadata,
    limits: GenerationLimits,
    rng: &mut R,
) -> TestSuite {
    let mut tests = suite.tests.clone();
    match kind {
        MutationKind::AddTest => {
            tests.push(generate_random_test(meta, limits, rng));
        }
        MutationKind::DeleteTest => {
            assert!(tests.len() > 1, "DeleteTest on a single-test suite");
            let t = rng.gen_range(0..tests.len());
            tests.remove(t);
        }
        MutationKind::AddAction => {
            let cap = action_cap(limits);
            let eligible = eligible_tests(suite, |t| t.num_actions() < cap);
            let t = eligible[rng.gen_range(0..eligible.len())];
            let pos = rng.gen_range(1..=tests[t].calls.len());
            let call = random_action(meta, rng);
            tests[t].calls.insert(pos, call);
        }
        MutationKind::DeleteAction => {
            let eligible = eligible_tests(suite, |t| t.num_actions() > 0);
            let t = eligible[rng.gen_range(0..eligible.len())];
            let pos = rng.gen_range(1..tests[t].calls.len());
            tests[t].calls.remove(pos);
        }
        MutationKind::ModifyAction => {
            let eligible = eligible_tests(suite, |t| !modifiable_calls(t, meta).is_empty());
            let t = eligible[rng.gen_range(0..eligible.len())];
            let calls = modifiable_calls(&tests[t], meta);
            let c = calls[rng.gen_range(0..calls.len())];
            let call = &mut tests[t].calls[c];
            if call.is_constructor() {
                let i = rng.gen_range(0..meta.constructor.len());
                call.args[i] = sample_param(&meta.constructor[i], rng);
            } else {
                let specs = meta
                    .params_of(call.action_id)
                    .expect("valid suite references known actions");
                let reidentify = rng.gen_bool(0.5) || specs.is_empty();
                if reidentify {
                    *call = random_action(meta, rng);
                } else {
                    let i = rng.gen_range(0..specs.len());
                    call.args[i] = sample_param(&specs[i], rng);
                }
            }
        }
    }
    TestSuite::new(tests)
}

/// Uniform crossover: one fair coin per shared index decides whether the
/// pair is kept or swapped; leftover tests of the longer parent go to a
/// child chosen by an independent coin each.
pub fn uniform_crossover<R: Rng + ?Sized>(
    a: &TestSuite,
    b: &TestSuite,
    rng: &mut R,
) -> (TestSuite, TestSuite) {
    let shared = a.num_tests().min(b.num_tests());
    let leftover = a.num_tests().max(b.num_tests()) - shared;
    let flips: Vec<bool> = (0..shared + leftover).map(|_| rng.gen_bool(0.5)).collect();
    crossover_with_flips(a, b, &flips)
}

/// Deterministic core of [`uniform_crossover`]. `flips[i]` for `i < shared`
/// means "swap"; for leftovers it means "send to the second child".
pub fn crossover_with_flips(a: &TestSuite, b: &TestSuite, flips: &[bool]) -> (TestSuite, TestSuite) {
    let shared = a.num_tests().min(b.num_tests());
    let longer = if a.num_tests() >= b.num_tests() { a } else { b };
    let mut c1 = Vec::with_capacity(longer.num_tests());
    let mut c2 = Vec::with_capacity(longer.num_tests());
    for i in 0..shared {
        let (x, y) = (&a.tests[i], &b.tests[i]);
        if flips[i] {
            c1.push(y.clone());
            c2.push(x.clone());
        } else {
            c1.push(x.clone());
            c2.push(y.clone());
        }
    }
    for (i, test) in longer.tests.iter().enumerate().skip(shared) {
        if flips[i] {
            c2.push(test.clone());
        } else {
            c1.push(test.clone());
        }
    }
    // Each shared index hands one test to each child, so neither is empty
    // when both parents are valid.
    debug_assert!(c1.len() >= shared && c2.len() >= shared);
    (TestSuite::new(c1), TestSuite::new(c2))
}

/// Samples `k` distinct members and returns a copy of the fittest. Ties go
/// to the lowest population index among the sampled members.
pub fn tournament_select<R: Rng + ?Sized>(
    population: &[TestSuite],
    k: usize,
    rng: &mut R,
) -> Result<TestSuite, SelectionError> {
    if k == 0 || k > population.len() {
        return Err(SelectionError::BadTournamentSize {
            k,
            population: population.len(),
        });
    }
    let mut sampled = index::sample(rng, population.len(), k).into_vec();
    sampled.sort_unstable();
    let mut best: Option<(usize, f64)> = None;
    for i in sampled {
        let f = population[i].fitness.ok_or(SelectionError::Unevaluated(i))?;
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((i, f));
        }
    }
    let (winner, _) = best.expect("k >= 1");
    Ok(population[winner].clone())
}

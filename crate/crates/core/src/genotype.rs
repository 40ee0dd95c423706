//! Internal solution representation: a suite is a list of test cases, a test
//! case is a constructor call followed by actions, and every call is an
//! action id plus integer arguments.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::metadata::{sample_param, ParamSpec, UutMetadata, CONSTRUCTOR_ID};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenotypeError {
    #[error("malformed genotype JSON: {0}")]
    Json(String),
    #[error("suite must contain at least one test")]
    EmptySuite,
    #[error("test {test}: must contain at least the constructor call")]
    EmptyTest { test: usize },
    #[error("test {test}: first call must be the constructor (-1), found {found}")]
    ConstructorNotFirst { test: usize, found: i64 },
    #[error("test {test}, call {call}: constructor may only appear first")]
    ConstructorRepeated { test: usize, call: usize },
    #[error("test {test}, call {call}: action id {id} out of range")]
    ActionOutOfRange { test: usize, call: usize, id: i64 },
    #[error("test {test}, call {call}: action {id} takes {expected} argument(s), found {found}")]
    Arity {
        test: usize,
        call: usize,
        id: i64,
        expected: usize,
        found: usize,
    },
    #[error("test {test}, call {call}: argument {arg} = {value} outside [{min}, {max}]")]
    ArgOutOfBounds {
        test: usize,
        call: usize,
        arg: usize,
        value: i64,
        min: i64,
        max: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionCall {
    pub action_id: i64,
    pub args: Vec<i64>,
}

impl ActionCall {
    pub fn new(action_id: i64, args: Vec<i64>) -> Self {
        Self { action_id, args }
    }

    pub fn is_constructor(&self) -> bool {
        self.action_id == CONSTRUCTOR_ID
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestCase {
    pub calls: Vec<ActionCall>,
}

impl TestCase {
    /// Number of calls after the constructor.
    pub fn num_actions(&self) -> usize {
        self.calls.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    pub tests: Vec<TestCase>,
    /// Cached score; cleared whenever the structure changes.
    pub fitness: Option<f64>,
}

impl TestSuite {
    pub fn new(tests: Vec<TestCase>) -> Self {
        Self {
            tests,
            fitness: None,
        }
    }

    pub fn with_fitness(mut self, fitness: f64) -> Self {
        self.fitness = Some(fitness);
        self
    }

    pub fn num_tests(&self) -> usize {
        self.tests.len()
    }

    /// Mean number of calls per test, constructor included.
    pub fn mean_calls_per_test(&self) -> f64 {
        let total: usize = self.tests.iter().map(|t| t.calls.len()).sum();
        total as f64 / self.tests.len() as f64
    }

    /// Mean number of post-constructor actions per test.
    pub fn mean_actions_per_test(&self) -> f64 {
        let total: usize = self.tests.iter().map(TestCase::num_actions).sum();
        total as f64 / self.tests.len() as f64
    }

    /// Checks every structural invariant against the metadata.
    pub fn validate(&self, meta: &UutMetadata) -> Result<(), GenotypeError> {
        if self.tests.is_empty() {
            return Err(GenotypeError::EmptySuite);
        }
        for (t, test) in self.tests.iter().enumerate() {
            let Some(first) = test.calls.first() else {
                return Err(GenotypeError::EmptyTest { test: t });
            };
            if !first.is_constructor() {
                return Err(GenotypeError::ConstructorNotFirst {
                    test: t,
                    found: first.action_id,
                });
            }
            for (c, call) in test.calls.iter().enumerate() {
                if c > 0 && call.is_constructor() {
                    return Err(GenotypeError::ConstructorRepeated { test: t, call: c });
                }
                let specs = meta
                    .params_of(call.action_id)
                    .ok_or(GenotypeError::ActionOutOfRange {
                        test: t,
                        call: c,
                        id: call.action_id,
                    })?;
                check_args(specs, &call.args, t, c, call.action_id)?;
            }
        }
        Ok(())
    }
}

fn check_args(
    specs: &[ParamSpec],
    args: &[i64],
    test: usize,
    call: usize,
    id: i64,
) -> Result<(), GenotypeError> {
    if specs.len() != args.len() {
        return Err(GenotypeError::Arity {
            test,
            call,
            id,
            expected: specs.len(),
            found: args.len(),
        });
    }
    for (arg, (spec, &value)) in specs.iter().zip(args).enumerate() {
        if !spec.contains(value) {
            let (min, max) = spec.effective_bounds();
            return Err(GenotypeError::ArgOutOfBounds {
                test,
                call,
                arg,
                value,
                min,
                max,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationLimits {
    pub max_test_cases: usize,
    pub max_actions: usize,
}

impl Default for GenerationLimits {
    fn default() -> Self {
        Self {
            max_test_cases: 20,
            max_actions: 20,
        }
    }
}

impl GenerationLimits {
    pub fn new(max_test_cases: usize, max_actions: usize) -> Self {
        assert!(
            max_test_cases >= 1 && max_actions >= 1,
            "generation limits must be at least 1"
        );
        Self {
            max_test_cases,
            max_actions,
        }
    }
}

fn sample_args<R: Rng + ?Sized>(specs: &[ParamSpec], rng: &mut R) -> Vec<i64> {
    specs.iter().map(|s| sample_param(s, rng)).collect()
}

pub(crate) fn random_constructor<R: Rng + ?Sized>(meta: &UutMetadata, rng: &mut R) -> ActionCall {
    ActionCall::new(CONSTRUCTOR_ID, sample_args(&meta.constructor, rng))
}

/// A uniformly chosen action with freshly sampled arguments.
pub(crate) fn random_action<R: Rng + ?Sized>(meta: &UutMetadata, rng: &mut R) -> ActionCall {
    let idx = rng.gen_range(0..meta.actions.len());
    ActionCall::new(idx as i64, sample_args(&meta.actions[idx].params, rng))
}

pub fn generate_random_test<R: Rng + ?Sized>(
    meta: &UutMetadata,
    limits: GenerationLimits,
    rng: &mut R,
) -> TestCase {
    let mut calls = vec![random_constructor(meta, rng)];
    let n = rng.gen_range(1..=limits.max_actions);
    calls.extend((0..n).map(|_| random_action(meta, rng)));
    TestCase { calls }
}

pub fn generate_random_suite<R: Rng + ?Sized>(
    meta: &UutMetadata,
    limits: GenerationLimits,
    rng: &mut R,
) -> TestSuite {
    let n = rng.gen_range(1..=limits.max_test_cases);
    TestSuite::new((0..n).map(|_| generate_random_test(meta, limits, rng)).collect())
}

/// Canonical nested-array text: one call per line, four-space indents.
pub fn encode_suite(suite: &TestSuite) -> String {
    let mut out = String::from("[\n");
    for (t, test) in suite.tests.iter().enumerate() {
        out.push_str("    [\n");
        for (c, call) in test.calls.iter().enumerate() {
            let args = call
                .args
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(", ");
            let sep = if c + 1 < test.calls.len() { "," } else { "" };
            let _ = writeln!(out, "        [{}, [{}]]{}", call.action_id, args, sep);
        }
        out.push_str(if t + 1 < suite.tests.len() { "    ],\n" } else { "    ]\n" });
    }
    out.push_str("]\n");
    out
}

pub fn decode_suite(text: &str, meta: &UutMetadata) -> Result<TestSuite, GenotypeError> {
    let raw: Vec<Vec<(i64, Vec<i64>)>> =
        serde_json::from_str(text).map_err(|e| GenotypeError::Json(e.to_string()))?;
    let suite = TestSuite::new(
        raw.into_iter()
            .map(|calls| TestCase {
                calls: calls
                    .into_iter()
                    .map(|(id, args)| ActionCall::new(id, args))
                    .collect(),
            })
            .collect(),
    );
    suite.validate(meta)?;
    Ok(suite)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::metadata::tests::bmi;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The single-test suite printed alongside its rendered test function.
    pub(crate) const SAMPLE_GENOTYPE: &str = "[
    [
        [-1, [246, 680, 2]],
        [2, [18]],
        [4, []],
        [1, [466]],
        [5, []],
        [4, []],
        [1, [26]],
        [5, []]
    ]
]";

    pub(crate) fn sample_suite() -> TestSuite {
        decode_suite(SAMPLE_GENOTYPE, &bmi()).unwrap()
    }

    #[test]
    fn decodes_sample_genotype() {
        let suite = sample_suite();
        assert_eq!(suite.num_tests(), 1);
        assert_eq!(suite.tests[0].calls.len(), 8);
        assert_eq!(suite.tests[0].calls[0], ActionCall::new(-1, vec![246, 680, 2]));
        assert_eq!(suite.tests[0].calls[3], ActionCall::new(1, vec![466]));
        assert!(suite.fitness.is_none());
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let meta = bmi();
        let canonical = encode_suite(&sample_suite());
        let again = encode_suite(&decode_suite(&canonical, &meta).unwrap());
        assert_eq!(canonical, again);
        assert!(canonical.starts_with("[\n    [\n        [-1, [246, 680, 2]],\n"));
    }

    #[test]
    fn out_of_range_action_rejected() {
        let err = decode_suite("[[[-1,[1,1,1]],[9,[1]]]]", &bmi()).unwrap_err();
        assert!(err.to_string().contains("action id 9 out of range"), "{err}");
    }

    #[test]
    fn decode_error_paths() {
        let meta = bmi();
        assert_eq!(decode_suite("[]", &meta), Err(GenotypeError::EmptySuite));
        assert_eq!(
            decode_suite("[[]]", &meta),
            Err(GenotypeError::EmptyTest { test: 0 })
        );
        assert!(matches!(
            decode_suite("[[[3,[]]]]", &meta),
            Err(GenotypeError::ConstructorNotFirst { found: 3, .. })
        ));
        assert!(matches!(
            decode_suite("[[[-1,[1,1,1]],[-1,[1,1,1]]]]", &meta),
            Err(GenotypeError::ConstructorRepeated { call: 1, .. })
        ));
        assert!(matches!(
            decode_suite("[[[-1,[1,1]]]]", &meta),
            Err(GenotypeError::Arity { expected: 3, found: 2, .. })
        ));
        assert!(matches!(
            decode_suite("[[[-1,[1,1,151]]]]", &meta),
            Err(GenotypeError::ArgOutOfBounds { arg: 2, value: 151, .. })
        ));
        assert!(matches!(decode_suite("[[[-1,", &meta), Err(GenotypeError::Json(_))));
    }

    #[test]
    fn forced_sizes() {
        let meta = bmi();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let test = generate_random_test(&meta, GenerationLimits::new(20, 1), &mut rng);
        assert_eq!(test.calls.len(), 2);
        let suite = generate_random_suite(&meta, GenerationLimits::new(1, 20), &mut rng);
        assert_eq!(suite.num_tests(), 1);
    }

    #[test]
    fn constructor_args_within_bmi_bounds() {
        let meta = bmi();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let test = generate_random_test(&meta, GenerationLimits::default(), &mut rng);
            let args = &test.calls[0].args;
            assert_eq!(args.len(), 3);
            assert!(args[2] <= 150 && args[2] >= -1);
            assert!(args[0] >= -1 && args[1] >= -1);
        }
    }

    #[test]
    fn same_seed_same_suite() {
        let meta = bmi();
        let a = generate_random_suite(&meta, GenerationLimits::default(), &mut ChaCha8Rng::seed_from_u64(11));
        let b = generate_random_suite(&meta, GenerationLimits::default(), &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn action_counts_are_uniform() {
        // Chi-square goodness of fit over 10^4 draws against U{1..20}.
        let meta = bmi();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut hist = [0usize; 21];
        let n = 10_000;
        for _ in 0..n {
            let t = generate_random_test(&meta, GenerationLimits::default(), &mut rng);
            hist[t.num_actions()] += 1;
        }
        assert_eq!(hist[0], 0);
        assert!(hist[1..].iter().all(|&c| c > 0));
        let expected = n as f64 / 20.0;
        let chi2: f64 = hist[1..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 19 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 43.82, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn generated_suites_are_valid_and_round_trip(seed: u64, tc in 1usize..8, acts in 1usize..8) {
            let meta = bmi();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let suite = generate_random_suite(&meta, GenerationLimits::new(tc, acts), &mut rng);
            prop_assert!(suite.validate(&meta).is_ok());
            prop_assert!(suite.num_tests() <= tc);
            prop_assert!(suite.tests.iter().all(|t| (1..=acts).contains(&t.num_actions())));
            let back = decode_suite(&encode_suite(&suite), &meta).unwrap();
            prop_assert_eq!(back, suite);
        }
    }
}

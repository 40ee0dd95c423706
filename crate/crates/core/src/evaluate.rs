//! Scoring backends used by the engines.

use thiserror::Error;

use crate::fitness::{
    bloat_penalty, calculate_fitness, statement_fitness, CoverageReport, FitnessConfig,
    FitnessError, FitnessKind,
};
use crate::genotype::TestSuite;
use crate::metadata::UutMetadata;
use crate::minipy::{check_compatibility, enumerate_goals, execute_suite, ExecError, Program};
use crate::phenotype::{measure_external_coverage, ExternalError, RunnerConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    External(#[from] ExternalError),
    #[error("{0}")]
    Unsupported(String),
}

/// Assigns a fitness score (higher is better) to a suite.
pub trait Evaluator {
    fn evaluate(&self, suite: &TestSuite) -> Result<f64, EvalError>;
}

/// Adapts a plain function; handy for tests and synthetic landscapes.
pub struct FnEvaluator<F>(pub F);

impl<F: Fn(&TestSuite) -> f64> Evaluator for FnEvaluator<F> {
    fn evaluate(&self, suite: &TestSuite) -> Result<f64, EvalError> {
        Ok((self.0)(suite))
    }
}

#[derive(Debug, Clone)]
pub struct Assessment {
    pub fitness: f64,
    pub statement_coverage: f64,
    pub branch_coverage: Option<f64>,
    pub bloat_penalty: f64,
    pub report: CoverageReport,
}

/// Runs suites on the built-in interpreter.
#[derive(Debug, Clone)]
pub struct BuiltinEvaluator {
    program: Program,
    meta: UutMetadata,
    config: FitnessConfig,
}

impl BuiltinEvaluator {
    pub fn new(program: Program, meta: UutMetadata, config: FitnessConfig) -> Result<Self, EvalError> {
        check_compatibility(&program, &meta)?;
        let (lines, goals) = enumerate_goals(&program);
        if lines.is_empty() {
            return Err(FitnessError::NoExecutableLines.into());
        }
        if config.kind == FitnessKind::BranchDistance && goals.is_empty() {
            return Err(FitnessError::NoGoals.into());
        }
        Ok(Self {
            program,
            meta,
            config,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn config(&self) -> &FitnessConfig {
        &self.config
    }

    pub fn assess(&self, suite: &TestSuite) -> Result<Assessment, EvalError> {
        let report = execute_suite(&self.program, suite, &self.meta)?;
        Ok(Assessment {
            fitness: calculate_fitness(suite, &report, &self.config)?,
            statement_coverage: statement_fitness(&report)?,
            branch_coverage: report.branch_coverage(),
            bloat_penalty: bloat_penalty(suite, &self.config),
            report,
        })
    }
}

impl Evaluator for BuiltinEvaluator {
    fn evaluate(&self, suite: &TestSuite) -> Result<f64, EvalError> {
        let report = execute_suite(&self.program, suite, &self.meta)?;
        Ok(calculate_fitness(suite, &report, &self.config)?)
    }
}

/// Runs suites under pytest; statement fitness only.
#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    meta: UutMetadata,
    runner: RunnerConfig,
    config: FitnessConfig,
}

impl ExternalEvaluator {
    pub fn new(meta: UutMetadata, runner: RunnerConfig, config: FitnessConfig) -> Result<Self, EvalError> {
        if config.kind != FitnessKind::Statement {
            return Err(EvalError::Unsupported(
                "the external backend only measures statement coverage".into(),
            ));
        }
        Ok(Self {
            meta,
            runner,
            config,
        })
    }

    pub fn coverage(&self, suite: &TestSuite) -> Result<f64, EvalError> {
        Ok(measure_external_coverage(suite, &self.meta, &self.runner)?)
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, suite: &TestSuite) -> Result<f64, EvalError> {
        Ok(self.coverage(suite)? - bloat_penalty(suite, &self.config))
    }
}

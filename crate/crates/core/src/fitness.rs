//! Coverage-based fitness scoring.
//!
//! Two maximized scores share the bloat penalty: statement coverage, and a
//! branch-distance score that rewards getting close to untaken outcomes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::genotype::TestSuite;

/// Offset added to strict comparisons so a zero distance means the outcome holds.
pub const DISTANCE_OFFSET: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum FitnessError {
    #[error("program has no executable lines")]
    NoExecutableLines,
    #[error("program has no branch goals")]
    NoGoals,
    #[error("unknown branch goal {0}")]
    UnknownGoal(BranchGoal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessKind {
    Statement,
    BranchDistance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessConfig {
    pub kind: FitnessKind,
    pub num_tests_penalty: f64,
    pub length_test_penalty: f64,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            kind: FitnessKind::Statement,
            num_tests_penalty: 10.0,
            length_test_penalty: 30.0,
        }
    }
}

impl FitnessConfig {
    pub fn with_kind(kind: FitnessKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchGoal {
    pub predicate_id: usize,
    pub desired_outcome: bool,
}

impl fmt::Display for BranchGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let outcome = if self.desired_outcome { "True" } else { "False" };
        write!(f, "p{}:{}", self.predicate_id, outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// One evaluation of a branch predicate, with the operand values needed to
/// recompute its distance to either outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum CondTrace {
    /// Numeric comparison.
    Compare { op: CmpOp, lhs: f64, rhs: f64 },
    /// Any other condition (truthiness, non-numeric comparison): only the
    /// outcome is known.
    Opaque(bool),
    /// Conjunction; `None` marks operands skipped by short-circuiting.
    And(Vec<Option<CondTrace>>),
    Or(Vec<Option<CondTrace>>),
    Not(Box<CondTrace>),
}

impl CondTrace {
    pub fn outcome(&self) -> bool {
        match self {
            CondTrace::Compare { op, lhs, rhs } => op.apply(*lhs, *rhs),
            CondTrace::Opaque(b) => *b,
            CondTrace::And(parts) => parts.iter().all(|p| p.as_ref().is_some_and(CondTrace::outcome)),
            CondTrace::Or(parts) => parts.iter().any(|p| p.as_ref().is_some_and(CondTrace::outcome)),
            CondTrace::Not(inner) => !inner.outcome(),
        }
    }
}

fn compare_distance(op: CmpOp, a: f64, b: f64, desired: bool) -> f64 {
    if a.is_nan() || b.is_nan() {
        return if op.apply(a, b) == desired { 0.0 } else { DISTANCE_OFFSET };
    }
    let k = DISTANCE_OFFSET;
    let holds = op.apply(a, b);
    // Distance toward the comparison holding, and toward it failing.
    let (to_true, to_false) = match op {
        CmpOp::Eq => ((a - b).abs(), if holds { k } else { 0.0 }),
        CmpOp::Ne => (if holds { 0.0 } else { k }, (a - b).abs()),
        CmpOp::Lt => (if holds { 0.0 } else { a - b + k }, if holds { b - a } else { 0.0 }),
        CmpOp::Le => (if holds { 0.0 } else { a - b }, if holds { b - a + k } else { 0.0 }),
        CmpOp::Gt => (if holds { 0.0 } else { b - a + k }, if holds { a - b } else { 0.0 }),
        CmpOp::Ge => (if holds { 0.0 } else { b - a }, if holds { a - b + k } else { 0.0 }),
    };
    if desired {
        to_true
    } else {
        to_false
    }
}

fn part_distance(part: &Option<CondTrace>, desired: bool) -> f64 {
    part.as_ref()
        .map_or(DISTANCE_OFFSET, |p| raw_branch_distance(p, desired))
}

/// Distance from a recorded predicate evaluation to the desired outcome.
/// Zero exactly when the evaluation produced that outcome.
pub fn raw_branch_distance(trace: &CondTrace, desired: bool) -> f64 {
    match trace {
        CondTrace::Compare { op, lhs, rhs } => compare_distance(*op, *lhs, *rhs, desired),
        CondTrace::Opaque(b) => {
            if *b == desired {
                0.0
            } else {
                DISTANCE_OFFSET
            }
        }
        CondTrace::And(parts) if desired => parts.iter().map(|p| part_distance(p, true)).sum(),
        CondTrace::And(parts) => parts
            .iter()
            .map(|p| part_distance(p, false))
            .fold(f64::INFINITY, f64::min),
        CondTrace::Or(parts) if desired => parts
            .iter()
            .map(|p| part_distance(p, true))
            .fold(f64::INFINITY, f64::min),
        CondTrace::Or(parts) => parts.iter().map(|p| part_distance(p, false)).sum(),
        CondTrace::Not(inner) => raw_branch_distance(inner, !desired),
    }
}

/// Maps a raw distance into [0, 1).
pub fn normalize(d: f64) -> f64 {
    d / (d + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GoalRecord {
    pub reached: bool,
    pub attained: bool,
    /// Smallest raw distance seen; only kept while the goal is unattained.
    pub min_raw_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageReport {
    pub executable_lines: BTreeSet<u32>,
    pub covered_lines: BTreeSet<u32>,
    pub goal_records: BTreeMap<BranchGoal, GoalRecord>,
}

impl CoverageReport {
    /// Empty report over a program's lines and goals.
    pub fn new(executable_lines: BTreeSet<u32>, goals: &[BranchGoal]) -> Self {
        Self {
            executable_lines,
            covered_lines: BTreeSet::new(),
            goal_records: goals.iter().map(|g| (*g, GoalRecord::default())).collect(),
        }
    }

    pub fn cover_line(&mut self, line: u32) {
        if self.executable_lines.contains(&line) {
            self.covered_lines.insert(line);
        }
    }

    /// Folds one predicate evaluation into both of its goals.
    pub fn record_predicate(&mut self, predicate_id: usize, trace: &CondTrace) {
        for desired_outcome in [true, false] {
            let goal = BranchGoal {
                predicate_id,
                desired_outcome,
            };
            let rec = self.goal_records.entry(goal).or_default();
            rec.reached = true;
            if rec.attained {
                continue;
            }
            let d = raw_branch_distance(trace, desired_outcome);
            if d == 0.0 {
                rec.attained = true;
                rec.min_raw_distance = None;
            } else {
                rec.min_raw_distance = Some(rec.min_raw_distance.map_or(d, |m| m.min(d)));
            }
        }
    }

    pub fn goals(&self) -> Vec<BranchGoal> {
        self.goal_records.keys().copied().collect()
    }

    /// Percentage of branch goals attained.
    pub fn branch_coverage(&self) -> Option<f64> {
        if self.goal_records.is_empty() {
            return None;
        }
        let hit = self.goal_records.values().filter(|r| r.attained).count();
        Some(100.0 * hit as f64 / self.goal_records.len() as f64)
    }
}

pub fn statement_fitness(report: &CoverageReport) -> Result<f64, FitnessError> {
    if report.executable_lines.is_empty() {
        return Err(FitnessError::NoExecutableLines);
    }
    Ok(100.0 * report.covered_lines.len() as f64 / report.executable_lines.len() as f64)
}

/// Size penalty: tests / num_tests_penalty + mean test length / length_test_penalty,
/// where a test's length counts the constructor call.
pub fn bloat_penalty(suite: &TestSuite, config: &FitnessConfig) -> f64 {
    suite.num_tests() as f64 / config.num_tests_penalty
        + suite.mean_calls_per_test() / config.length_test_penalty
}

pub fn goal_distance(goal: &BranchGoal, report: &CoverageReport) -> Result<f64, FitnessError> {
    let rec = report
        .goal_records
        .get(goal)
        .ok_or(FitnessError::UnknownGoal(*goal))?;
    Ok(match (rec.reached, rec.attained, rec.min_raw_distance) {
        (_, true, _) => 0.0,
        (false, _, _) => 1.0,
        (true, false, Some(d)) => normalize(d),
        // Reached but nothing recorded cannot come out of record_predicate.
        (true, false, None) => 1.0,
    })
}

/// Branch-distance score on the 0..100 scale, minus the bloat penalty.
pub fn branch_fitness(
    goals: &[BranchGoal],
    report: &CoverageReport,
    suite: &TestSuite,
    config: &FitnessConfig,
) -> Result<f64, FitnessError> {
    if goals.is_empty() {
        return Err(FitnessError::NoGoals);
    }
    let total = goals
        .iter()
        .map(|g| goal_distance(g, report))
        .sum::<Result<f64, _>>()?;
    Ok(100.0 * (1.0 - total / goals.len() as f64) - bloat_penalty(suite, config))
}

/// Score for `suite` given the report produced by executing it.
pub fn calculate_fitness(
    suite: &TestSuite,
    report: &CoverageReport,
    config: &FitnessConfig,
) -> Result<f64, FitnessError> {
    match config.kind {
        FitnessKind::Statement => Ok(statement_fitness(report)? - bloat_penalty(suite, config)),
        FitnessKind::BranchDistance => branch_fitness(&report.goals(), report, suite, config),
    }
}

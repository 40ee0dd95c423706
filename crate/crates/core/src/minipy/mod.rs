//! A small class-based language and its instrumented interpreter, used as
//! the deterministic coverage backend.
//!
//! The accepted language is a Python subset: one class, methods taking an
//! explicit `self`, assignments, `if`/`elif`/`else`, `return`, `raise`, and
//! arithmetic/comparison/boolean expressions. No loops.

pub mod ast;
mod interp;
mod lexer;
mod parser;

use std::collections::BTreeSet;

use thiserror::Error;

pub use ast::Program;
pub use interp::{CallOutcome, ExecutionTrace, Machine, Object, PredicateEval, RaisedError, Value};
pub use parser::parse_program;

use crate::fitness::{BranchGoal, CoverageReport};
use crate::genotype::{TestCase, TestSuite};
use crate::metadata::{ActionKind, UutMetadata};
use ast::{Stmt, StmtKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: unsupported construct `{what}`")]
    Unsupported { line: u32, col: u32, what: String },
}

impl ParseError {
    pub(crate) fn syntax(line: u32, col: u32, msg: impl Into<String>) -> Self {
        Self::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub(crate) fn unsupported(line: u32, col: u32, what: impl Into<String>) -> Self {
        Self::Unsupported {
            line,
            col,
            what: what.into(),
        }
    }
}

/// Metadata that does not describe the program. Distinct from an exception
/// raised by a test, which is an ordinary outcome.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("metadata class {meta:?} does not match program class {program:?}")]
    ClassMismatch { meta: String, program: String },
    #[error("constructor takes {program} parameter(s), metadata declares {meta}")]
    ConstructorArity { program: usize, meta: usize },
    #[error("action {name:?}: program has no method of that name")]
    UnknownMethod { name: String },
    #[error("action {name:?}: method takes {program} parameter(s), metadata declares {meta}")]
    MethodArity {
        name: String,
        program: usize,
        meta: usize,
    },
    #[error("call references action id {0}, which the metadata does not define")]
    UnknownAction(i64),
}

/// Checks that every metadata action resolves against the program.
pub fn check_compatibility(program: &Program, meta: &UutMetadata) -> Result<(), ExecError> {
    if program.class_name != meta.class_name {
        return Err(ExecError::ClassMismatch {
            meta: meta.class_name.clone(),
            program: program.class_name.clone(),
        });
    }
    if program.constructor.params.len() != meta.constructor.len() {
        return Err(ExecError::ConstructorArity {
            program: program.constructor.params.len(),
            meta: meta.constructor.len(),
        });
    }
    for action in meta.actions.iter().filter(|a| a.kind == ActionKind::Method) {
        let m = program.method(&action.name).ok_or_else(|| ExecError::UnknownMethod {
            name: action.name.clone(),
        })?;
        if m.params.len() != action.params.len() {
            return Err(ExecError::MethodArity {
                name: action.name.clone(),
                program: m.params.len(),
                meta: action.params.len(),
            });
        }
    }
    Ok(())
}

fn collect_lines(body: &[Stmt], lines: &mut BTreeSet<u32>, goals: &mut Vec<BranchGoal>) {
    for stmt in body {
        lines.insert(stmt.line);
        if let StmtKind::If { branches, orelse } = &stmt.kind {
            for b in branches {
                lines.insert(b.line);
                goals.push(BranchGoal {
                    predicate_id: b.predicate_id,
                    desired_outcome: true,
                });
                goals.push(BranchGoal {
                    predicate_id: b.predicate_id,
                    desired_outcome: false,
                });
                collect_lines(&b.body, lines, goals);
            }
            if let Some(body) = orelse {
                collect_lines(body, lines, goals);
            }
        }
    }
}

/// Executable statement lines of every method body, and the two outcome
/// goals of every `if`/`elif` predicate.
pub fn enumerate_goals(program: &Program) -> (BTreeSet<u32>, Vec<BranchGoal>) {
    let mut lines = BTreeSet::new();
    let mut goals = Vec::new();
    for m in program.bodies() {
        collect_lines(&m.body, &mut lines, &mut goals);
    }
    goals.sort();
    (lines, goals)
}

fn to_values(args: &[i64]) -> Vec<Value> {
    args.iter().map(|&v| Value::Int(v)).collect()
}

/// Runs one test case. An exception ends the test; later calls are skipped.
pub fn execute_test(
    program: &Program,
    test: &TestCase,
    meta: &UutMetadata,
) -> Result<ExecutionTrace, ExecError> {
    let mut machine = Machine::new(program);
    let Some((ctor, rest)) = test.calls.split_first() else {
        return Ok(machine.into_trace());
    };
    let Ok(mut obj) = machine.construct(to_values(&ctor.args)) else {
        return Ok(machine.into_trace());
    };
    for call in rest {
        let action = meta
            .action(call.action_id)
            .ok_or(ExecError::UnknownAction(call.action_id))?;
        let result = match action.kind {
            ActionKind::Assign => {
                let value = call.args.first().copied().map_or(Value::None, Value::Int);
                machine.assign(&mut obj, &action.name, value)
            }
            ActionKind::Method => machine
                .call(&mut obj, &action.name, to_values(&call.args))
                .map(|_| ()),
        };
        if result.is_err() {
            break;
        }
    }
    Ok(machine.into_trace())
}

/// Executes every test independently and merges their coverage.
pub fn execute_suite(
    program: &Program,
    suite: &TestSuite,
    meta: &UutMetadata,
) -> Result<CoverageReport, ExecError> {
    check_compatibility(program, meta)?;
    let (lines, goals) = enumerate_goals(program);
    let mut report = CoverageReport::new(lines, &goals);
    for test in &suite.tests {
        let trace = execute_test(program, test, meta)?;
        for &line in &trace.covered_lines {
            report.cover_line(line);
        }
        for eval in &trace.predicates {
            report.record_predicate(eval.predicate_id, &eval.trace);
        }
    }
    Ok(report)
}

//! External representation: pytest source text, plus coverage measurement
//! by running that source under pytest with the pytest-cov plugin.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;
use thiserror::Error;

use crate::genotype::TestSuite;
use crate::metadata::{ActionKind, UutMetadata};

fn join_args(args: &[i64]) -> String {
    args.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

/// Renders a suite as a pytest module. Tests are named `test_<i>` after
/// their position in the suite and contain no assertions.
pub fn render_suite(suite: &TestSuite, meta: &UutMetadata) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "import pytest");
    let _ = writeln!(out, "import {}", meta.file);
    for (i, test) in suite.tests.iter().enumerate() {
        let _ = writeln!(out);
        let _ = writeln!(out, "def test_{i}():");
        for call in &test.calls {
            if call.is_constructor() {
                let _ = writeln!(
                    out,
                    "    cut = {}.{}({})",
                    meta.file,
                    meta.class_name,
                    join_args(&call.args)
                );
                continue;
            }
            let action = meta
                .action(call.action_id)
                .expect("render requires a suite validated against the metadata");
            match action.kind {
                ActionKind::Assign => {
                    let _ = writeln!(out, "    cut.{} = {}", action.name, join_args(&call.args));
                }
                ActionKind::Method => {
                    let _ = writeln!(out, "    cut.{}({})", action.name, join_args(&call.args));
                }
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("test runner {0:?} not found")]
    RunnerNotFound(String),
    #[error("failed to launch test runner: {0}")]
    Launch(io::Error),
    #[error("unit under test not found at {0}")]
    UutMissing(PathBuf),
    #[error("coverage report missing after runner exited with {status}: {stderr}")]
    ReportMissing { status: String, stderr: String },
    #[error("coverage report unparseable: {0}")]
    ReportUnparseable(String),
    #[error("coverage report has no entry for {0}")]
    FileNotInReport(String),
    #[error("I/O error preparing the run: {0}")]
    Io(#[from] io::Error),
}

/// How to invoke pytest.
#[derive(Debug, Clone)]
pub struct RunnerConfig {
    /// Executable, e.g. `python3`.
    pub program: String,
    /// Arguments placed before the test file, e.g. `["-m", "pytest"]`.
    pub prefix_args: Vec<String>,
    /// Directory holding `<meta.file>.py`.
    pub uut_dir: PathBuf,
}

impl RunnerConfig {
    pub fn python(uut_dir: impl Into<PathBuf>) -> Self {
        Self {
            program: "python3".into(),
            prefix_args: vec!["-m".into(), "pytest".into()],
            uut_dir: uut_dir.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CovReport {
    files: std::collections::BTreeMap<String, CovFile>,
}

#[derive(Debug, Deserialize)]
struct CovFile {
    summary: CovSummary,
    /// Present in newer coverage.py reports; keyed by qualified name, with
    /// `""` holding module-level code.
    #[serde(default)]
    functions: std::collections::BTreeMap<String, CovRegion>,
}

#[derive(Debug, Deserialize)]
struct CovRegion {
    summary: CovSummary,
}

#[derive(Debug, Deserialize)]
struct CovSummary {
    covered_lines: u64,
    num_statements: u64,
}

/// Statement coverage (0..100) of `<meta.file>.py` from a pytest-cov JSON report.
///
/// When the report breaks lines down by function, only function bodies are
/// counted, matching the built-in backend; `class`/`def` lines run on import
/// and would otherwise inflate every score. Older reports fall back to the
/// whole-file summary.
pub fn parse_coverage_json(report: &str, module_file: &str) -> Result<f64, ExternalError> {
    let parsed: CovReport =
        serde_json::from_str(report).map_err(|e| ExternalError::ReportUnparseable(e.to_string()))?;
    let wanted = format!("{module_file}.py");
    let entry = parsed
        .files
        .iter()
        .find(|(path, _)| Path::new(path).file_name().is_some_and(|n| n == wanted.as_str()))
        .map(|(_, f)| f)
        .ok_or_else(|| ExternalError::FileNotInReport(wanted.clone()))?;
    let bodies: Vec<&CovSummary> = entry
        .functions
        .iter()
        .filter(|(name, _)| !name.is_empty())
        .map(|(_, r)| &r.summary)
        .collect();
    let (covered, total) = if bodies.is_empty() {
        (entry.summary.covered_lines, entry.summary.num_statements)
    } else {
        bodies
            .iter()
            .fold((0, 0), |(c, t), s| (c + s.covered_lines, t + s.num_statements))
    };
    if total == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * covered as f64 / total as f64)
}

/// Writes the rendered suite into a fresh temp dir, runs pytest with
/// coverage over the unit under test, and returns its statement coverage.
/// Failing tests are expected and do not abort the measurement.
pub fn measure_external_coverage(
    suite: &TestSuite,
    meta: &UutMetadata,
    runner: &RunnerConfig,
) -> Result<f64, ExternalError> {
    let uut = runner.uut_dir.join(format!("{}.py", meta.file));
    if !uut.is_file() {
        return Err(ExternalError::UutMissing(uut));
    }
    let uut_dir = runner.uut_dir.canonicalize()?;
    let work = tempfile::tempdir()?;
    let test_file = work.path().join(format!("test_generated_{}.py", meta.file));
    std::fs::write(&test_file, render_suite(suite, meta))?;
    let report_path = work.path().join("coverage.json");

    let output = Command::new(&runner.program)
        .args(&runner.prefix_args)
        .arg(&test_file)
        .arg(format!("--cov={}", meta.file))
        .arg(format!("--cov-report=json:{}", report_path.display()))
        .args(["-q", "-p", "no:cacheprovider", "--rootdir"])
        .arg(work.path())
        .current_dir(work.path())
        .env("PYTHONPATH", &uut_dir)
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .env("COVERAGE_FILE", work.path().join(".coverage"))
        .output()
        .map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => ExternalError::RunnerNotFound(runner.program.clone()),
            _ => ExternalError::Launch(e),
        })?;

    let report = std::fs::read_to_string(&report_path).map_err(|_| {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let stdout = String::from_utf8_lossy(&output.stdout);
        ExternalError::ReportMissing {
            status: output.status.to_string(),
            stderr: format!("{}{}", stderr.trim(), stdout.trim())
                .chars()
                .take(2000)
                .collect(),
        }
    })?;
    parse_coverage_json(&report, &meta.file)
}

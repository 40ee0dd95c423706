//! Command-line front end: `generate`, `evaluate`, `render` and `boundary`.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! runtime and backend failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::derivative::{boundary_scan, write_scan_csv, Axis, AxisTarget, ScanSpec};
use crate::engines::{
    genetic_algorithm, hill_climb, write_stats_csv, GeneticConfig, HillClimberConfig, SearchError,
    SearchResult,
};
use crate::evaluate::{BuiltinEvaluator, EvalError, Evaluator, ExternalEvaluator};
use crate::fitness::{goal_distance, FitnessConfig, FitnessKind};
use crate::genotype::{decode_suite, encode_suite, GenerationLimits, TestSuite};
use crate::metadata::{parse_metadata, ActionKind, UutMetadata};
use crate::minipy::{parse_program, Program};
use crate::phenotype::{render_suite, RunnerConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn runtime(msg: impl std::fmt::Display) -> Failure {
    Failure::Runtime(msg.to_string())
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::External(_) => runtime(e),
            _ => usage(e),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Eval(inner) => inner.into(),
            SearchError::Config(_) => usage(e),
            SearchError::Selection(_) => runtime(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "suitegen", version, about = "Search-based unit test suite generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a test suite and write its genotype, pytest file and stats.
    Generate(GenerateArgs),
    /// Score an existing genotype.
    Evaluate(EvaluateArgs),
    /// Render a genotype as a pytest module.
    Render(RenderArgs),
    /// Scan a 2-D input grid and report program derivatives between neighbours.
    Boundary(BoundaryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Hill,
    Ga,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitnessArg {
    Statement,
    Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Builtin,
    External,
}

#[derive(Debug, Args)]
struct UutArgs {
    /// Metadata file describing the unit under test.
    #[arg(long)]
    metadata: PathBuf,
    /// Mini-language source; defaults to <metadata dir>/<location>/<file>.mpy.
    #[arg(long)]
    source: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoringArgs {
    #[arg(long, value_enum, default_value_t = FitnessArg::Statement)]
    fitness: FitnessArg,
    #[arg(long, value_enum, default_value_t = Backend::Builtin)]
    backend: Backend,
    /// Directory holding <file>.py for the external backend; defaults to
    /// <metadata dir>/<location>.
    #[arg(long)]
    uut_dir: Option<PathBuf>,
    /// Python interpreter used by the external backend.
    #[arg(long, default_value = "python3")]
    python: String,
    /// Divisor of the test-count term of the bloat penalty.
    #[arg(long, default_value_t = 10.0)]
    num_tests_penalty: f64,
    /// Divisor of the mean-test-length term of the bloat penalty.
    #[arg(long, default_value_t = 30.0)]
    length_test_penalty: f64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    uut: UutArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long, value_enum, default_value_t = Algorithm::Ga)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 200)]
    generations: usize,
    /// Random seed; derived from the clock (and echoed) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    max_test_cases: usize,
    #[arg(long, default_value_t = 20)]
    max_actions: usize,
    /// Hill climber: mutation attempts per generation.
    #[arg(long, default_value_t = 200)]
    max_tries: usize,
    /// Hill climber: random restarts allowed.
    #[arg(long, default_value_t = 5)]
    max_restarts: usize,
    #[arg(long, default_value_t = 20)]
    population: usize,
    #[arg(long, default_value_t = 6)]
    tournament: usize,
    #[arg(long, default_value_t = 0.7)]
    crossover: f64,
    #[arg(long, default_value_t = 0.7)]
    mutation: f64,
    /// Generations without improvement before the GA stops.
    #[arg(long, default_value_t = 30)]
    exhaustion: usize,
    #[arg(long)]
    out_genotype: Option<PathBuf>,
    #[arg(long)]
    out_test: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    uut: UutArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long)]
    genotype: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long)]
    genotype: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundaryArgs {
    #[command(flatten)]
    uut: UutArgs,
    /// Method called at every grid point.
    #[arg(long)]
    method: String,
    /// Horizontal axis as NAME=START:END[:STEP] (END inclusive). NAME is a
    /// constructor parameter or an assignable attribute.
    #[arg(long)]
    x: String,
    /// Vertical axis, same syntax as --x.
    #[arg(long)]
    y: String,
    /// Base constructor arguments, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    ctor: String,
    /// Method arguments, comma separated.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    args: String,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, stdout, stderr),
        Command::Evaluate(a) => cmd_evaluate(a, stdout),
        Command::Render(a) => cmd_render(a, stdout),
        Command::Boundary(a) => cmd_boundary(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn read_input(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &[u8]) -> CmdResult {
    fs::write(path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_metadata(path: &Path) -> Result<UutMetadata, Failure> {
    let text = read_input(path, "metadata")?;
    parse_metadata(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn uut_dir(metadata_path: &Path, meta: &UutMetadata) -> PathBuf {
    metadata_path
        .parent()
        .unwrap_or(Path::new(""))
        .join(&meta.location)
}

fn load_program(uut: &UutArgs, meta: &UutMetadata) -> Result<Program, Failure> {
    let path = uut
        .source
        .clone()
        .unwrap_or_else(|| uut_dir(&uut.metadata, meta).join(format!("{}.mpy", meta.file)));
    let text = read_input(&path, "source")?;
    parse_program(&text).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn load_suite(path: &Path, meta: &UutMetadata) -> Result<TestSuite, Failure> {
    let text = read_input(path, "genotype")?;
    decode_suite(&text, meta).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn fitness_config(s: &ScoringArgs) -> Result<FitnessConfig, Failure> {
    if !(s.num_tests_penalty > 0.0 && s.length_test_penalty > 0.0) {
        return Err(usage("penalty divisors must be positive"));
    }
    Ok(FitnessConfig {
        kind: match s.fitness {
            FitnessArg::Statement => FitnessKind::Statement,
            FitnessArg::Branch => FitnessKind::BranchDistance,
        },
        num_tests_penalty: s.num_tests_penalty,
        length_test_penalty: s.length_test_penalty,
    })
}

enum Scorer {
    Builtin(BuiltinEvaluator),
    External(ExternalEvaluator),
}

impl Scorer {
    fn build(uut: &UutArgs, scoring: &ScoringArgs, meta: &UutMetadata) -> Result<Self, Failure> {
        let config = fitness_config(scoring)?;
        match scoring.backend {
            Backend::Builtin => {
                let program = load_program(uut, meta)?;
                Ok(Scorer::Builtin(BuiltinEvaluator::new(program, meta.clone(), config)?))
            }
            Backend::External => {
                let dir = scoring
                    .uut_dir
                    .clone()
                    .unwrap_or_else(|| uut_dir(&uut.metadata, meta));
                let mut runner = RunnerConfig::python(dir);
                runner.program = scoring.python.clone();
                Ok(Scorer::External(ExternalEvaluator::new(meta.clone(), runner, config)?))
            }
        }
    }

    fn evaluator(&self) -> &dyn Evaluator {
        match self {
            Scorer::Builtin(e) => e,
            Scorer::External(e) => e,
        }
    }

    fn report(&self, suite: &TestSuite, out: &mut dyn Write, per_goal: bool) -> CmdResult {
        let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(runtime);
        match self {
            Scorer::Builtin(e) => {
                let a = e.assess(suite)?;
                w(out, format!("fitness: {}", a.fitness))?;
                w(out, format!("statement_coverage: {}", a.statement_coverage))?;
                if let Some(b) = a.branch_coverage {
                    w(out, format!("branch_coverage: {b}"))?;
                }
                w(out, format!("bloat_penalty: {}", a.bloat_penalty))?;
                w(out, format!("tests: {}", suite.num_tests()))?;
                w(out, format!("mean_actions: {}", suite.mean_actions_per_test()))?;
                if per_goal {
                    for goal in a.report.goals() {
                        let d = goal_distance(&goal, &a.report).map_err(usage)?;
                        w(out, format!("goal {goal}: {d}"))?;
                    }
                }
            }
            Scorer::External(e) => {
                let cov = e.coverage(suite)?;
                let fit = e.evaluate(suite)?;
                w(out, format!("fitness: {fit}"))?;
                w(out, format!("statement_coverage: {cov}"))?;
                w(out, format!("tests: {}", suite.num_tests()))?;
                w(out, format!("mean_actions: {}", suite.mean_actions_per_test()))?;
            }
        }
        Ok(())
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn cmd_generate(a: GenerateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    if a.max_test_cases < 1 || a.max_actions < 1 {
        return Err(usage("--max-test-cases and --max-actions must be at least 1"));
    }
    let meta = load_metadata(&a.uut.metadata)?;
    let seed = match a.seed {
        Some(s) => s,
        None => {
            let s = clock_seed();
            let _ = writeln!(stderr, "seed: {s}");
            s
        }
    };
    let limits = GenerationLimits::new(a.max_test_cases, a.max_actions);
    let scorer = Scorer::build(&a.uut, &a.scoring, &meta)?;

    let result: SearchResult = match a.algorithm {
        Algorithm::Hill => {
            let cfg = HillClimberConfig {
                max_gen: a.generations,
                max_tries: a.max_tries,
                max_restarts: a.max_restarts,
                limits,
                seed,
            };
            hill_climb(&cfg, &meta, scorer.evaluator())?
        }
        Algorithm::Ga => {
            let cfg = GeneticConfig {
                max_gen: a.generations,
                population_size: a.population,
                tournament_size: a.tournament,
                crossover_probability: a.crossover,
                mutation_probability: a.mutation,
                exhaustion: a.exhaustion,
                limits,
                seed,
            };
            genetic_algorithm(&cfg, &meta, scorer.evaluator())?
        }
    };

    if let Some(p) = &a.out_genotype {
        write_output(p, encode_suite(&result.best).as_bytes())?;
    }
    if let Some(p) = &a.out_test {
        write_output(p, render_suite(&result.best, &meta).as_bytes())?;
    }
    if let Some(p) = &a.stats {
        let mut buf = Vec::new();
        write_stats_csv(&result.stats, &mut buf).map_err(runtime)?;
        write_output(p, &buf)?;
    }
    writeln!(stdout, "generations: {}", result.generations_run).map_err(runtime)?;
    if a.algorithm == Algorithm::Hill {
        writeln!(stdout, "restarts: {}", result.restarts_used).map_err(runtime)?;
    }
    scorer.report(&result.best, stdout, false)
}

fn cmd_evaluate(a: EvaluateArgs, stdout: &mut dyn Write) -> CmdResult {
    let meta = load_metadata(&a.uut.metadata)?;
    let suite = load_suite(&a.genotype, &meta)?;
    let scorer = Scorer::build(&a.uut, &a.scoring, &meta)?;
    scorer.report(&suite, stdout, true)
}

fn cmd_render(a: RenderArgs, stdout: &mut dyn Write) -> CmdResult {
    let meta = load_metadata(&a.metadata)?;
    let suite = load_suite(&a.genotype, &meta)?;
    let text = render_suite(&suite, &meta);
    match &a.out {
        Some(p) => write_output(p, text.as_bytes()),
        None => stdout.write_all(text.as_bytes()).map_err(runtime),
    }
}

fn parse_int_list(text: &str, what: &str) -> Result<Vec<i64>, Failure> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| usage(format!("{what}: {t:?} is not an integer")))
        })
        .collect()
}

fn parse_axis(text: &str, program: &Program, meta: &UutMetadata) -> Result<Axis, Failure> {
    let bad = || usage(format!("axis {text:?}: expected NAME=START:END[:STEP]"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let name = name.trim();
    let parts: Vec<i64> = range
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (start, end, step) = match parts[..] {
        [s, e] => (s, e, 1),
        [s, e, st] => (s, e, st),
        _ => return Err(bad()),
    };
    let target = if let Some(i) = program.constructor.params.iter().position(|p| p == name) {
        AxisTarget::Constructor(i)
    } else if meta
        .actions
        .iter()
        .any(|a| a.kind == ActionKind::Assign && a.name == name)
        || program.method(&format!("set_{name}")).is_some()
    {
        AxisTarget::Attribute(name.to_string())
    } else {
        return Err(usage(format!(
            "axis {name:?} is neither a constructor parameter nor an assignable attribute"
        )));
    };
    Ok(Axis {
        name: name.to_string(),
        target,
        start,
        end,
        step,
    })
}

fn cmd_boundary(a: BoundaryArgs, stdout: &mut dyn Write) -> CmdResult {
    let meta = load_metadata(&a.uut.metadata)?;
    let program = load_program(&a.uut, &meta)?;
    let spec = ScanSpec {
        method: a.method.clone(),
        method_args: parse_int_list(&a.args, "--args")?,
        constructor_args: parse_int_list(&a.ctor, "--ctor")?,
        x: parse_axis(&a.x, &program, &meta)?,
        y: parse_axis(&a.y, &program, &meta)?,
    };
    let grid = boundary_scan(&program, &spec).map_err(usage)?;
    let mut buf = Vec::new();
    write_scan_csv(&grid, &mut buf).map_err(runtime)?;
    match &a.out {
        Some(p) => write_output(p, &buf),
        None => stdout.write_all(&buf).map_err(runtime),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_meta() -> String {
        concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/bmi.json").to_string()
    }

    fn run_capture(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("suitegen").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_and_version_succeed() {
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
        assert_eq!(run_capture(&["--version"]).0, EXIT_OK);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_capture(&["generate", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(!err.is_empty());
    }

    #[test]
    fn odd_population_is_config_error() {
        let meta = fixture_meta();
        let (code, _, err) = run_capture(&[
            "generate", "--metadata", &meta, "--algorithm", "ga", "--population", "21", "--seed", "1",
        ]);
        assert_eq!(code, EXIT_USAGE, "{err}");
        assert!(err.contains("even"), "{err}");
    }

    #[test]
    fn missing_seed_is_echoed() {
        let meta = fixture_meta();
        let (code, _, err) = run_capture(&[
            "generate", "--metadata", &meta, "--algorithm", "hill", "--generations", "1", "--max-tries", "2",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(err.starts_with("seed: "), "{err}");
    }

    #[test]
    fn one_point_axis_is_usage_error() {
        let meta = fixture_meta();
        let (code, _, err) = run_capture(&[
            "boundary", "--metadata", &meta, "--method", "classify_bmi_adults",
            "--x", "weight=60:70", "--y", "height=160:160", "--ctor", "160,60,21",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("at least 2"), "{err}");
    }

    #[test]
    fn axis_syntax() {
        let program = crate::fixtures::bmi_program();
        let meta = crate::fixtures::bmi_metadata();
        let ax = parse_axis("weight=60:70:2", &program, &meta).unwrap();
        assert_eq!(ax.target, AxisTarget::Constructor(1));
        assert_eq!((ax.start, ax.end, ax.step), (60, 70, 2));
        assert!(parse_axis("weight=60", &program, &meta).is_err());
        assert!(parse_axis("shoe_size=1:2", &program, &meta).is_err());
        assert_eq!(parse_int_list("1, -2,3", "x").unwrap(), vec![1, -2, 3]);
        assert!(parse_int_list("1,a", "x").is_err());
    }

    #[test]
    fn missing_metadata_is_usage_error() {
        let (code, _, err) = run_capture(&["render", "--metadata", "/nonexistent/m.json", "--genotype", "g"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("cannot read metadata"), "{err}");
    }
}

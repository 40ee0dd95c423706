use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use suitegen::fixtures::{bmi_metadata, bmi_program, SAMPLE_GENOTYPE, SAMPLE_PHENOTYPE};
use suitegen::evaluate::BuiltinEvaluator;
use suitegen::fitness::FitnessConfig;
use suitegen::genotype::decode_suite;

fn metadata() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/bmi.json").to_string()
}

fn golden_genotype() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden/sample_genotype.json").to_string()
}

fn suitegen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suitegen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn render_golden() {
    let out = suitegen(&["render", "--metadata", &metadata(), "--genotype", &golden_genotype()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), SAMPLE_PHENOTYPE);

    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("test_out.py");
    let out = suitegen(&[
        "render", "--metadata", &metadata(), "--genotype", &golden_genotype(), "--out", path_str(&target),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(target).unwrap(), SAMPLE_PHENOTYPE);
}

#[test]
fn evaluate_prints_fitness_of_report() {
    let meta = bmi_metadata();
    let suite = decode_suite(SAMPLE_GENOTYPE, &meta).unwrap();
    let expected = BuiltinEvaluator::new(bmi_program(), meta, FitnessConfig::default())
        .unwrap()
        .assess(&suite)
        .unwrap();

    let args = ["evaluate", "--metadata", &metadata(), "--genotype", &golden_genotype()];
    let first = suitegen(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.contains(&format!("fitness: {}\n", expected.fitness)), "{text}");
    assert!(text.contains(&format!("statement_coverage: {}\n", expected.statement_coverage)));
    let goal_lines = text.lines().filter(|l| l.starts_with("goal p")).count();
    assert_eq!(goal_lines, bmi_program().num_predicates * 2);
    assert_eq!(stdout(&suitegen(&args)), text);

    let branch = suitegen(&[
        "evaluate", "--metadata", &metadata(), "--genotype", &golden_genotype(), "--fitness", "branch",
    ]);
    assert_eq!(branch.status.code(), Some(0));
    assert_ne!(stdout(&branch), text);
}

#[test]
fn corrupted_genotype_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[[[-1, [1, 2]]").unwrap();
    let out = suitegen(&["evaluate", "--metadata", &metadata(), "--genotype", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: "), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());

    std::fs::write(&bad, "[[[-1, [1, 2, 3]], [9, []]]]").unwrap();
    let out = suitegen(&["render", "--metadata", &metadata(), "--genotype", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("out of range"), "{}", stderr(&out));
}

#[test]
fn generate_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    let t = dir.path().join("test_bmi.py");
    let s = dir.path().join("stats.csv");
    let out = suitegen(&[
        "generate", "--metadata", &metadata(), "--algorithm", "ga", "--generations", "15", "--seed", "7",
        "--out-genotype", path_str(&g), "--out-test", path_str(&t), "--stats", path_str(&s),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).is_empty());
    let meta = bmi_metadata();
    let suite = decode_suite(&std::fs::read_to_string(&g).unwrap(), &meta).unwrap();
    assert_eq!(
        std::fs::read_to_string(&t).unwrap(),
        suitegen::phenotype::render_suite(&suite, &meta)
    );
    let stats = std::fs::read_to_string(&s).unwrap();
    assert!(stats.starts_with("generation,best_fitness,num_tests,avg_actions\n"));
    assert!(stdout(&out).contains("fitness: "));
}

#[test]
fn disabled_exhaustion_emits_every_generation() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("stats.csv");
    let out = suitegen(&[
        "generate", "--metadata", &metadata(), "--algorithm", "ga", "--generations", "120",
        "--exhaustion", "121", "--seed", "3", "--stats", path_str(&s),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stats = std::fs::read_to_string(&s).unwrap();
    let rows: Vec<&str> = stats.lines().skip(1).collect();
    assert_eq!(rows.len(), 120);
    let mut last = f64::NEG_INFINITY;
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], (i + 1).to_string());
        let f: f64 = cols[1].parse().unwrap();
        assert!(f >= last);
        last = f;
    }
}

#[test]
fn config_errors_exit_one() {
    for extra in [
        &["--algorithm", "ga", "--population", "21"][..],
        &["--algorithm", "ga", "--tournament", "50"][..],
        &["--algorithm", "ga", "--crossover", "1.5"][..],
        &["--max-actions", "0"][..],
        &["--fitness", "branch", "--backend", "external"][..],
    ] {
        let meta = metadata();
        let mut argv = vec!["generate", "--metadata", meta.as_str(), "--seed", "1", "--generations", "1"];
        argv.extend_from_slice(extra);
        let out = suitegen(&argv);
        assert_eq!(out.status.code(), Some(1), "{extra:?}: {}", stderr(&out));
        assert!(stderr(&out).contains("error"), "{extra:?}");
    }
    let out = suitegen(&["generate", "--algorithm", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
    let out = suitegen(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_backend_prerequisite_exits_two() {
    let out = suitegen(&[
        "evaluate", "--metadata", &metadata(), "--genotype", &golden_genotype(), "--backend", "external",
        "--python", "no-such-python-interpreter-4b1e",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("not found"));
}

#[test]
fn source_override() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("alt.mpy");
    std::fs::write(&src, "class Other:\n    def __init__(self, a, b, c):\n        self.a = a\n").unwrap();
    let out = suitegen(&[
        "evaluate", "--metadata", &metadata(), "--genotype", &golden_genotype(), "--source", path_str(&src),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("does not match"), "{}", stderr(&out));
}

fn boundary_rows(extra: &[&str]) -> (Output, Vec<Vec<String>>) {
    let meta = metadata();
    let mut argv = vec!["boundary", "--metadata", meta.as_str()];
    argv.extend_from_slice(extra);
    let out = suitegen(&argv);
    let rows = stdout(&out)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (out, rows)
}

#[test]
fn boundary_scan_is_row_major() {
    let (out, rows) = boundary_rows(&[
        "--method", "classify_bmi_adults", "--x", "weight=60:70", "--y", "height=158:162:2",
        "--ctor", "160,60,21",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(rows[0], ["x", "y", "output", "pd_right", "pd_up"]);
    let mut expected = Vec::new();
    for y in [158, 160, 162] {
        for x in 60..=70 {
            expected.push((x.to_string(), y.to_string()));
        }
    }
    let got: Vec<_> = rows[1..].iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(got, expected);
    for r in &rows[1..] {
        assert_eq!(r[3].is_empty(), r[0] == "70");
        assert_eq!(r[4].is_empty(), r[1] == "162");
    }
    // At 160 cm the Normal/Overweight change happens between 64 and 65 kg.
    let row160: Vec<_> = rows[1..].iter().filter(|r| r[1] == "160").collect();
    for pair in row160.windows(2) {
        let pd: f64 = pair[0][3].parse().unwrap();
        assert_eq!(pd > 0.0, pair[0][2] != pair[1][2]);
        assert_eq!(pd > 0.0, pair[0][0] == "64", "{pair:?}");
    }
}

#[test]
fn boundary_attribute_axis_and_errors() {
    let (out, rows) = boundary_rows(&[
        "--method", "classify_bmi_teens_and_children", "--x", "age=1:3", "--y", "weight=10:11",
        "--ctor", "100,10,10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(rows.len(), 1 + 6);
    assert!(rows[1][2].starts_with("Invalid age"));

    let (out, _) = boundary_rows(&[
        "--method", "classify_bmi_adults", "--x", "weight=60:70", "--y", "height=160:160", "--ctor", "160,60,21",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let (out, _) = boundary_rows(&[
        "--method", "nope", "--x", "weight=60:70", "--y", "height=160:161", "--ctor", "160,60,21",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generated_test_file_is_valid_python_when_available() {
    let ok = Command::new("python3").arg("--version").output().is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("skipping: python3 not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let t: PathBuf = dir.path().join("test_bmi.py");
    let out = suitegen(&[
        "generate", "--metadata", &metadata(), "--algorithm", "hill", "--generations", "5", "--seed", "11",
        "--out-test", path_str(&t),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let check = Command::new("python3")
        .args(["-B", "-c", "import ast, sys; ast.parse(open(sys.argv[1]).read())"])
        .arg(&t)
        .status()
        .unwrap();
    assert!(check.success());
}

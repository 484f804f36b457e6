use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use reinit_bench::config::ExperimentConfig;
use reinit_bench::experiment::read_summary;
use reinit_bench::trace::read_trace;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reinit-bench"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn smoke_run_on_four_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("four_points.json");
    let start = Instant::now();
    let out = run(&["run", "--config", path(&cfg), "--out", path(dir.path())]);
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(elapsed < 1.0, "smoke run took {elapsed}s");

    let traces: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.file_name().into_string().unwrap()))
        .filter(|n| n.starts_with("trace_"))
        .collect();
    assert_eq!(traces.len(), 2);
    let summary = read_summary(dir.path()).unwrap();
    assert_eq!(summary.runs.len(), 2);
    assert_eq!(summary.config_hash, ExperimentConfig::load(&cfg).unwrap().hash());
    for r in &summary.runs {
        let trace = read_trace(&dir.path().join(&r.trace_file)).unwrap();
        assert_eq!(trace.last().unwrap().best_cost, r.final_cost);
        assert_eq!(r.level0_calls, 60);
    }
}

#[test]
fn seed_offset_changes_the_trace_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("four_points.json");
    let out = run(&[
        "run",
        "--config",
        path(&cfg),
        "--out",
        path(dir.path()),
        "--seed-offset",
        "10",
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("trace_seed10.csv").exists());
    assert!(dir.path().join("trace_seed11.csv").exists());
}

#[test]
fn generate_then_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.txt");
    let out = run(&[
        "gen-data",
        "--config",
        path(&configs().join("clusters_spec.json")),
        "--out",
        path(&data),
        "--seed",
        "4",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 750);

    let runs = dir.path().join("runs");
    assert_eq!(
        code(&run(&["run", "--config", path(&configs().join("four_points.json")), "--out", path(&runs)])),
        0
    );
    let curve = dir.path().join("curve.csv");
    let out = run(&[
        "aggregate",
        "--traces",
        path(&runs),
        "--out",
        path(&curve),
        "--axis",
        "level0-calls",
        "--points",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("level0_calls,median,p25,p75,mean\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn validate_at_small_scale() {
    let out = run(&["validate", "--scale", "0.02"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Usage errors and malformed configs are configuration errors.
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["validate", "--scale", "0"])), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"problem\": {\"kind\": \"kmeans\"}}").unwrap();
    assert_eq!(code(&run(&["run", "--config", path(&bad), "--out", path(dir.path())])), 1);
    let mismatched = dir.path().join("mismatched.json");
    std::fs::copy(configs().join("four_points.txt"), dir.path().join("four_points.txt")).unwrap();
    std::fs::write(
        &mismatched,
        std::fs::read_to_string(configs().join("four_points.json"))
            .unwrap()
            .replace("\"size\": 2", "\"size\": 3"),
    )
    .unwrap();
    assert_eq!(code(&run(&["run", "--config", path(&mismatched), "--out", path(&dir.path().join("o"))])), 1);

    // Missing inputs and unwritable outputs are I/O errors.
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["run", "--config", path(&missing), "--out", path(dir.path())])), 2);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = run(&[
        "run",
        "--config",
        path(&configs().join("four_points.json")),
        "--out",
        path(&blocker.join("sub")),
    ]);
    assert_eq!(code(&out), 2);

    // A trace that violates monotonicity is a parse error of the aggregate input.
    let traces = dir.path().join("traces");
    std::fs::create_dir(&traces).unwrap();
    std::fs::write(
        traces.join("trace_seed0.csv"),
        "evals,level0_calls,seconds,best_cost\n1,0,0,1\n2,1,0,5\n",
    )
    .unwrap();
    let out = run(&["aggregate", "--traces", path(&traces), "--out", path(&dir.path().join("c.csv"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn presets_resolve() {
    for name in ["four_points", "kmeans_a3", "hmm_128", "kmedoids_200", "rbm_8x10"] {
        let file = configs().join(format!("{name}.json"));
        let cfg = ExperimentConfig::load(&file).unwrap();
        cfg.resolve(&configs()).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.as_full().resolve(&configs()).unwrap();
    }
}

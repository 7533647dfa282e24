use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn feasikit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feasikit")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn halfspaces(seed: u64, solver: &str, out: &Path) -> String {
    format!(
        r#"{{"name": "hs", "seed": {seed},
            "problem": {{"generator": {{"kind": "random_halfspaces", "m": 50, "n": 10, "interior_radius": 0.1,
                                       "q": {{"kind": "box", "lo": -10, "hi": 10}}}}}},
            "solver": {solver},
            "diagnostics": {{"qf": ["FM", "QF1"], "summability": true, "basic_inequality": true}},
            "output": {{"dir": "{}"}}}}"#,
        out.display()
    )
}

const FINITE: &str = r#"{"control": {"kind": "cyclic_singleton"}, "mode": "CERTIFIED_FINITE"}"#;

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn finite_run_exits_zero_with_one_row_per_iterate() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "c.json", &halfspaces(3, FINITE, &out));
    let o = feasikit(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&out);
    assert_eq!(s["status"], "FINITE_CONVERGENCE");
    let k = s["k_star"].as_u64().unwrap() as usize;
    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), k + 2);
    assert!(lines[0].starts_with("k,r_k,alpha_k,active_indices"));
    assert!(lines[1].starts_with("0,"));
    // the final row has no step data and is feasible
    let last: Vec<&str> = lines[k + 1].split(',').collect();
    assert_eq!(last[0], k.to_string());
    assert!(last[1].is_empty());
    assert_eq!(last[8], "true");
    assert_eq!(last[9], "true");
    assert!(s["qf"].as_array().unwrap().iter().all(|q| q["verdict"]["pass"] == true));
}

#[test]
fn exhausted_budget_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "c.json", &halfspaces(3, FINITE, &out));
    let o = feasikit(&["solve", cfg.to_str().unwrap(), "--max-iter", "5"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(summary(&out)["status"], "BUDGET_EXHAUSTED");
    assert_eq!(fs::read_to_string(out.join("trace.csv")).unwrap().lines().count(), 7);
}

#[test]
fn errors_exit_one_with_the_error_kind() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"problem": {"generator": {"kind": "random_halfspaces"}}"#);
    let o = feasikit(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error[ParseError]"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 1"));

    let unknown = write(
        tmp.path(),
        "unknown.json",
        r#"{"seed": 1, "problem": {"generator": {"kind": "affine_only", "m": 2, "n": 3}}, "solvr": {}}"#,
    );
    let o = feasikit(&["solve", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("solvr"), "{}", stderr(&o));

    let missing = tmp.path().join("nope.json");
    let o = feasikit(&["solve", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("IoError"));
}

#[test]
fn certified_finite_gate() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let rejected = [
        r#"{"schedule": {"kind": "geometric", "r0": 1, "q": 0.5}, "control": {"kind": "cyclic_singleton"}, "mode": "CERTIFIED_FINITE"}"#,
        r#"{"schedule": {"kind": "zero"}, "control": {"kind": "cyclic_singleton"}, "mode": "CERTIFIED_FINITE"}"#,
        r#"{"control": {"kind": "cyclic_blocks", "blocks": [[1, 2, 3]]}, "mode": "CERTIFIED_FINITE"}"#,
    ];
    for (i, solver) in rejected.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("r{i}.json"), &halfspaces(1, solver, &out));
        let o = feasikit(&["solve", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{solver}");
        assert!(stderr(&o).contains("PreconditionViolation"), "{}", stderr(&o));
        assert!(!out.join("trace.csv").exists(), "no iteration may run");
    }
    for a in ["0.3", "1", "2", "5"] {
        let solver = format!(
            r#"{{"schedule": {{"kind": "power", "r0": 1, "alpha_exp": {a}}}, "control": {{"kind": "cyclic_singleton"}}, "mode": "CERTIFIED_FINITE"}}"#
        );
        let cfg = write(tmp.path(), "p.json", &halfspaces(1, &solver, &out));
        // acceptance is about validation; a short budget keeps the test quick
        let o = feasikit(&["solve", cfg.to_str().unwrap(), "--max-iter", "20"]);
        assert!(matches!(code(&o), 0 | 2), "alpha_exp {a}: {}", stderr(&o));
    }
}

#[test]
fn exploratory_mode_downgrades_the_gate_to_warnings() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let solver = r#"{"schedule": {"kind": "geometric", "r0": 1, "q": 0.5}, "control": {"kind": "cyclic_singleton"}, "max_iterations": 50}"#;
    let cfg = write(tmp.path(), "c.json", &halfspaces(1, solver, &out));
    let o = feasikit(&["solve", cfg.to_str().unwrap()]);
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
    let findings = summary(&out)["findings"].to_string();
    assert!(findings.contains("STAG"), "{findings}");
}

#[test]
fn same_seed_gives_identical_traces() {
    let tmp = TempDir::new().unwrap();
    let mut traces = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let cfg = write(tmp.path(), &format!("{run}.json"), &halfspaces(11, FINITE, &out));
        assert_eq!(code(&feasikit(&["solve", cfg.to_str().unwrap()])), 0);
        traces.push(fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    let out = tmp.path().join("c");
    let cfg = write(tmp.path(), "c.json", &halfspaces(11, FINITE, &out));
    assert_eq!(code(&feasikit(&["solve", cfg.to_str().unwrap(), "--seed", "12"])), 0);
    assert_ne!(fs::read(out.join("trace.csv")).unwrap(), traces[0]);
}

#[test]
fn generated_inline_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    let cfg = write(tmp.path(), "g.json", &halfspaces(5, FINITE, &out));
    let o = feasikit(&["generate", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut inline: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(inline["problem"]["inline"].is_object());
    let out2 = tmp.path().join("inline");
    inline["output"]["dir"] = serde_json::Value::String(out2.display().to_string());
    let cfg2 = write(tmp.path(), "inline.json", &inline.to_string());
    assert_eq!(code(&feasikit(&["solve", cfg.to_str().unwrap()])), 0);
    assert_eq!(code(&feasikit(&["solve", cfg2.to_str().unwrap()])), 0);
    assert_eq!(fs::read(out.join("trace.csv")).unwrap(), fs::read(out2.join("trace.csv")).unwrap());
}

#[test]
fn batch_runs_in_parallel_and_reports_the_worst_code() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("batch");
    let one = |name: &str, seed: u64, budget: usize| {
        format!(
            r#"{{"name": "{name}", "seed": {seed},
                "problem": {{"generator": {{"kind": "random_balls", "m": 6, "n": 3, "interior_radius": 0.2}}}},
                "solver": {{"max_iterations": {budget}}}}}"#
        )
    };
    let batch = format!(
        r#"{{"experiments": [{}, {}, {}]}}"#,
        one("a", 1, 10_000),
        one("b", 2, 10_000),
        one("c", 3, 1)
    );
    let cfg = write(tmp.path(), "batch.json", &batch);
    let o = feasikit(&["solve", cfg.to_str().unwrap(), "--jobs", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    for name in ["a", "b", "c"] {
        assert!(out.join(name).join("trace.csv").exists());
    }
    assert_eq!(summary(&out.join("c"))["status"], "BUDGET_EXHAUSTED");
}

#[test]
fn classify_prints_regime_and_intermittency() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &halfspaces(1, FINITE, tmp.path()));
    let o = feasikit(&["classify", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "hs: regime STAG_SUMMABLE; intermittency 49");
}

#[test]
fn probe_writes_a_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("probe");
    let cfg = format!(
        r#"{{"seed": 4,
            "problem": {{"generator": {{"kind": "random_halfspaces", "m": 5, "n": 3, "interior_radius": 0.2}}}},
            "diagnostics": {{"probes": [
                {{"kind": "erosion", "target": {{"kind": "ball", "center": [0, 0], "radius": 1}},
                  "sampling": {{"kind": "uniform", "r_max": 0.9}}, "center": [0, 0], "radius": 3, "samples": 200}},
                {{"kind": "subgradient_bound", "functions": [{{"kind": "affine", "a": [0.5, 0], "b": -1}}],
                  "z": [0, 0], "r": 2, "samples": 100, "extra_points": [[2, 0]]}},
                {{"kind": "oracle_distance", "sets": [{{"kind": "halfspace", "a": [-1, 0], "b": 0}},
                                                     {{"kind": "halfspace", "a": [0, -1], "b": 0}}],
                  "x": [-1, -1]}}
            ]}},
            "output": {{"dir": "{}"}}}}"#,
        out.display()
    );
    let cfg = write(tmp.path(), "p.json", &cfg);
    let o = feasikit(&["probe", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("probe.json")).unwrap()).unwrap();
    let text = report.to_string();
    assert!(text.contains("1.414213562373"), "{text}");
}

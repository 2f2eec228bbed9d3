use std::path::Path;
use std::process::{Command, Output};

fn dro(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dro")).args(args).current_dir(dir).output().expect("spawn dro")
}

fn generate(dir: &Path, out: &str, seed: &str, k: &str) {
    let o = dro(&["generate", "--seed", seed, "--k", k, "--n", "3", "--m", "2", "--out", out], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "a.json", "7", "50");
    generate(dir.path(), "b.json", "7", "50");
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    generate(dir.path(), "c.json", "8", "50");
    assert_ne!(a, std::fs::read(dir.path().join("c.json")).unwrap());
}

#[test]
fn solve_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", "3", "6");
    let o = dro(
        &[
            "solve", "--instance", "inst.json", "--solver", "ssl", "--geometry", "entropy", "--gap-rel", "0.01", "--out",
            "report.json", "--csv", "iters.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["solver"], "ssl");
    assert_eq!(report["termination"]["status"], "gap_reached");
    assert!(report["f_best"].as_f64().unwrap().is_finite());
    let csv = std::fs::read_to_string(dir.path().join("iters.csv")).unwrap();
    assert!(csv.starts_with("t,f_best,f_ergodic,lb,ub,wall_ms"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn solve_with_stepsize_grid() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", "2", "5");
    let o = dro(
        &[
            "solve", "--instance", "inst.json", "--solver", "sd", "--gap-rel", "0.01", "--max-iters", "20000",
            "--tune-scales", "0.1,1", "--out", "report.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["tuning_grid"].as_array().unwrap().len(), 8);
    let o = dro(
        &["solve", "--instance", "inst.json", "--solver", "ssl", "--tune-scales", "1", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_two_reports() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", "4", "5");
    for (solver, out) in [("benders", "a.json"), ("sd", "b.json")] {
        let o = dro(
            &["solve", "--instance", "inst.json", "--solver", solver, "--gap-rel", "0.001", "--out", out],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = dro(&["compare", "a.json", "b.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("benders") && text.contains("relative difference"), "{text}");
}

#[test]
fn bench_two_cells() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"n":3,"m":2,"k_list":[5],"seeds":[1,2],"ambiguities":["simplex"],
        "geometries":["entropy"],"solvers":["ssl"],"targets":[0.1,0.01,0.001],"time_cap_secs":10}"#;
    std::fs::write(dir.path().join("bench.json"), config).unwrap();
    let o = dro(&["bench", "--config", "bench.json", "--out", "bench.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "solver,geometry,ambiguity,K,n,m,seed,target,iters,secs");
    assert_eq!(lines.len(), 1 + 2 * 3);
    for l in &lines[1..] {
        let iters = l.split(',').nth(8).unwrap();
        assert!(iters.parse::<usize>().is_ok(), "{l}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = dro(&["solve", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = dro(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = dro(&["solve", "--instance", "missing.json", "--solver", "sd", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    // chi-square sets only support the Euclidean geometry
    let o = dro(
        &["generate", "--seed", "1", "--k", "4", "--ambiguity", "chi-square", "--r", "0.05", "--out", "chi.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dro(
        &["solve", "--instance", "chi.json", "--solver", "sd", "--geometry", "entropy", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

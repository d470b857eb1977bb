use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn proxcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxcert"))
        .args(args)
        .env_remove("PROXCERT_SEED")
        .output()
        .expect("spawn proxcert")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_lines(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn run_to(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out_path = path(dir, name);
    let mut args = vec!["run", "--output", s(&out_path)];
    args.extend_from_slice(extra);
    let out = proxcert(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    out_path
}

#[test]
fn run_writes_one_row_per_iteration() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(
        &dir,
        "t.csv",
        &[
            "--problem", "quadratic", "--cond", "100", "--dim", "20", "--seed", "1", "--solver", "mapm",
            "--alpha", "3", "--step-mode", "half-inverse-L", "--max-iters", "1000",
        ],
    );
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("# proxcert-trace v1\n"));
    let lines = data_lines(&trace);
    assert_eq!(lines[0], "k,f_y,gap,grad_map_norm,accepted,energy,x,y");
    assert_eq!(lines.len(), 1 + 1001);
    assert!(lines[1001].starts_with("1000,"));
}

#[test]
fn zero_iterations_give_a_single_row() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(&dir, "t.csv", &["--max-iters", "0"]);
    assert_eq!(data_lines(&trace).len(), 2);
}

#[test]
fn configuration_errors_exit_2() {
    // cond 1 gives L = 1, so s = 2 > 1/L.
    let out = proxcert(&["run", "--problem", "quadratic", "--dim", "3", "--cond", "1", "--step-mode", "explicit:2.0"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("exceeds 1/L"));

    let out = proxcert(&["run", "--problem", "nope"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("lasso-fat"), "{}", stderr(&out));

    let out = proxcert(&["run", "--solver", "fista"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("strongly_convex_apm"));

    let out = proxcert(&["run", "--solver", "apm", "--alpha", "2"]);
    assert_eq!(code(&out), 2);

    let out = proxcert(&["run", "--format", "xml"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn certify_strongly_convex_mapm_trace_in_both_formats() {
    let dir = TempDir::new().unwrap();
    for (name, format) in [("t.csv", "csv"), ("t.jsonl", "json-lines")] {
        let trace = run_to(
            &dir,
            name,
            &["--problem", "lasso", "--dim", "10", "--cond", "50", "--seed", "7", "--max-iters", "300",
              "--format", format, "--record-iterates"],
        );
        let report = path(&dir, &format!("{name}.report"));
        let out = proxcert(&["certify", "--trace", s(&trace), "--output", s(&report), "--prop2-sweep"]);
        assert_eq!(code(&out), 0, "{format}: {}", stderr(&out));
        let rows = data_lines(&report);
        assert_eq!(rows[0], "k,name,lhs,rhs,slack,pass");
        assert!(rows.iter().any(|r| r.contains(",theorem1_envelope,")));
        assert!(rows[1..].iter().all(|r| r.ends_with(",pass")));
    }
}

#[test]
fn json_lines_report() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(&dir, "t.csv", &["--max-iters", "50", "--record-iterates"]);
    let report = path(&dir, "r.jsonl");
    let out = proxcert(&["certify", "--trace", s(&trace), "--output", s(&report), "--format", "json-lines"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for line in std::fs::read_to_string(&report).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert!(v["name"].is_string());
    }
}

#[test]
fn shifted_optimum_is_reported() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(&dir, "t.csv", &["--max-iters", "200", "--record-iterates"]);
    // Raising F* puts F(y_k) below the optimum: corrupted data.
    let out = proxcert(&["certify", "--trace", s(&trace), "--output", s(&path(&dir, "a")), "--f-star-shift", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("below the reference optimum"));
    // Lowering it inflates the energy until it grows: a violation.
    let out = proxcert(&["certify", "--trace", s(&trace), "--output", s(&path(&dir, "b")), "--f-star-shift", "-1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("first at k = "), "{}", stderr(&out));
}

#[test]
fn unavailable_reference_exits_3() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(
        &dir,
        "t.csv",
        &["--problem", "lasso-fat", "--dim", "100", "--rows", "50", "--lam", "0.001", "--max-iters", "20",
          "--record-iterates", "--reference-budget", "1000"],
    );
    let out = proxcert(&["certify", "--trace", s(&trace), "--reference-budget", "1000"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("reference"));
}

#[test]
fn apm_trace_gets_variant_gated_certificates() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(&dir, "t.csv", &["--solver", "apm", "--max-iters", "100", "--record-iterates"]);
    let report = path(&dir, "r.csv");
    let out = proxcert(&["certify", "--trace", s(&trace), "--output", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = data_lines(&report);
    assert!(rows.contains(&",theorem1_envelope,,,,not_applicable".to_string()));
    assert!(rows.contains(&",theorem2_envelope,,,,not_applicable".to_string()));
    assert!(rows.iter().any(|r| r.contains(",descent_lemma,") && r.ends_with(",pass")));
    assert!(rows.iter().any(|r| r.contains(",inertial_identity,") && r.ends_with(",pass")));
}

#[test]
fn certify_refuses_unusable_traces() {
    let dir = TempDir::new().unwrap();
    let bare = run_to(&dir, "bare.csv", &["--max-iters", "10"]);
    let out = proxcert(&["certify", "--trace", s(&bare)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--record-iterates"));

    let trace = run_to(&dir, "t.csv", &["--max-iters", "10", "--record-iterates"]);
    let out = proxcert(&["certify", "--trace", s(&trace), "--seed", "99"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("hash"));

    let text = std::fs::read_to_string(&trace).unwrap().replacen("v1", "v9", 1);
    let tampered = path(&dir, "v9.csv");
    std::fs::write(&tampered, text).unwrap();
    let out = proxcert(&["certify", "--trace", s(&tampered)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn identical_invocations_produce_identical_files() {
    let dir = TempDir::new().unwrap();
    for format in ["csv", "json-lines"] {
        let args = ["--problem", "box-quadratic", "--dim", "8", "--seed", "3", "--max-iters", "100",
                    "--record-iterates", "--format", format];
        let a = run_to(&dir, &format!("a.{format}"), &args);
        let b = run_to(&dir, &format!("b.{format}"), &args);
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let dir = TempDir::new().unwrap();
    let run_with = |name: &str, seed: &str, env: Option<&str>| {
        let p = path(&dir, name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_proxcert"));
        cmd.args(["run", "--max-iters", "5", "--seed", seed, "--output", s(&p)]);
        match env {
            Some(v) => cmd.env("PROXCERT_SEED", v),
            None => cmd.env_remove("PROXCERT_SEED"),
        };
        assert!(cmd.status().unwrap().success());
        std::fs::read(p).unwrap()
    };
    let flag5 = run_with("a", "5", None);
    let env5 = run_with("b", "1", Some("5"));
    let flag1 = run_with("c", "1", None);
    assert_eq!(flag5, env5);
    assert_ne!(flag1, env5);
}

#[test]
fn compare_writes_gap_columns_and_summary() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "cmp.csv");
    let out = proxcert(&[
        "compare", "--problem", "quadratic", "--dim", "10", "--cond", "100", "--output", s(&table),
        "--spec", "solver=ista", "--spec", "solver=apm", "--spec", "solver=mapm,alpha=3,step-mode=half-inverse-L",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = data_lines(&table);
    assert_eq!(rows[0], "k,ista,apm,mapm");
    assert_eq!(rows.len(), 1 + 1001);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(&dir, "cmp.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["solvers"].as_array().unwrap().len(), 3);
    assert!(summary["rho_lower_bound"].as_f64().unwrap() > 0.0);
    assert!((summary["sqrt_mu_over_l"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    for s in summary["solvers"].as_array().unwrap() {
        assert!(s["rho_hat"].as_f64().is_some());
    }
}

#[test]
fn compare_json_lines_rows_are_self_describing() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "cmp.jsonl");
    let summary = path(&dir, "sum.json");
    let out = proxcert(&[
        "compare", "--dim", "4", "--format", "json-lines", "--output", s(&table), "--summary", s(&summary),
        "--spec", "solver=apm,max-iters=20", "--spec", "solver=mapm,max-iters=30",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 31);
    let last: serde_json::Value = serde_json::from_str(lines[30]).unwrap();
    assert_eq!(last["k"], 30);
    assert!(last["gap"]["apm"].is_null());
    assert!(last["gap"]["mapm"].is_number());
    assert!(summary.exists());
}

#[test]
fn compare_arity_and_problem_checks() {
    let out = proxcert(&["compare", "--spec", "solver=ista"]);
    assert_eq!(code(&out), 2);
    let out = proxcert(&["compare", "--spec", "solver=ista", "--spec", "solver=apm,cond=5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("different problem"));
    let out = proxcert(&["compare", "--spec", "solver=ista", "--spec", "solver=what"]);
    assert_eq!(code(&out), 2);
}

use std::path::Path;
use std::process::{Command, Output};

use stp_riccati::io::{sha256_hex, ResultFile};

fn riccati(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccati"))
        .args(args)
        .env("RICCATI_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    riccati(args).status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, kind: &str, n: &str, r: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    assert_eq!(
        code(&["gen", "--kind", kind, "--n", n, "--m", "2", "--r", r, "--seed", "7", "--out", p(&path)]),
        0
    );
    path
}

const GOLDEN: &str = r#"{
  "kind": "sdare", "r": 1, "n": 1, "m": 1,
  "A": [[[1.0]]], "B": [[[1.0]]],
  "Q": [[1.0]], "L": [[0.0]], "R": [[1.0]]
}"#;

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    let out = riccati(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["solve", "gen", "selftest"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["solve", "--out", p(&out)]), 1);
    assert_eq!(code(&["solve", "--in", "/nonexistent.json", "--out", p(&out)]), 1);
    assert_eq!(code(&["solve", "--in", "x", "--out", p(&out), "--method", "newton"]), 1);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"kind\": \"sdare\", ").unwrap();
    assert_eq!(code(&["solve", "--in", p(&bad), "--out", p(&out)]), 1);

    let indefinite = dir.path().join("indefinite.json");
    std::fs::write(&indefinite, GOLDEN.replace("\"Q\": [[1.0]]", "\"Q\": [[-1.0]]")).unwrap();
    let run = riccati(&["solve", "--in", p(&indefinite), "--out", p(&out)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(!out.exists());

    assert_eq!(code(&["gen", "--kind", "sdare", "--n", "0", "--m", "1", "--r", "1", "--out", p(&out)]), 1);
}

#[test]
fn solve_writes_result_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("golden.json");
    let out = dir.path().join("golden.out.json");
    std::fs::write(&input, GOLDEN).unwrap();
    for method in ["fp", "sda"] {
        assert_eq!(code(&["solve", "--in", p(&input), "--out", p(&out), "--method", method, "--verify"]), 0);
        let res = ResultFile::load(&out).unwrap();
        assert!(res.converged);
        assert!((res.x[0][0] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert_eq!(res.input_hash, sha256_hex(GOLDEN.as_bytes()));
        assert!(res.report.residual_original.unwrap() <= 1e-12);
    }
}

#[test]
fn generated_instances_verify() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, r) in [("sdare", "3"), ("scare", "2")] {
        let input = generate(dir.path(), &format!("{kind}.json"), kind, "3", r);
        let out = dir.path().join(format!("{kind}.out.json"));
        for method in ["fp", "sda"] {
            let args = ["solve", "--in", p(&input), "--out", p(&out), "--method", method, "--verify"];
            assert_eq!(code(&args), 0, "{kind} {method}");
        }
        let res = ResultFile::load(&out).unwrap();
        assert_eq!(res.x.len(), 3);
        assert_eq!(res.f.as_ref().unwrap().len(), 2);
    }
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.json", "scare", "2", "2");
    let b = generate(dir.path(), "b.json", "scare", "2", "2");
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn iteration_budget_exit_three_with_partial_result() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate(dir.path(), "in.json", "sdare", "3", "2");
    let out = dir.path().join("partial.json");
    let args = ["solve", "--in", p(&input), "--out", p(&out), "--tol", "1e-30", "--max-iter", "3"];
    assert_eq!(code(&args), 3);
    let res = ResultFile::load(&out).unwrap();
    assert!(!res.converged);
    assert_eq!(res.report.iterations, 3);
}

#[test]
fn failed_verification_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate(dir.path(), "in.json", "sdare", "3", "2");
    let out = dir.path().join("out.json");
    let args = [
        "solve", "--in", p(&input), "--out", p(&out), "--tol", "1e-3", "--verify", "--verify-tol", "1e-12",
    ];
    assert_eq!(code(&args), 2);
    assert!(out.exists());
}

#[test]
fn selftest_exit_codes() {
    let quick = riccati(&["selftest", "--quick"]);
    assert_eq!(quick.status.code(), Some(0));
    let text = String::from_utf8_lossy(&quick.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert_eq!(code(&["selftest"]), 0);
    let fault = riccati(&["selftest", "--quick", "--inject-fault"]);
    assert_eq!(fault.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fault.stdout).contains("FAIL"));
}

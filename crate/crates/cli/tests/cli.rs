use std::process::{Command, Output};

fn rellich(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rellich"))
        .args(args)
        .env_remove("RELLICH_SENS_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn frame_of_three_by_three_block() {
    let o = rellich(&["frame", "--system", "ex14.json", "--at", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("x1 = (0, 1, 0)"), "{out}");
    assert!(out.contains("x2 = (0, 0, 1)"), "{out}");
}

#[test]
fn diagonal_ray_null_vector() {
    let o = rellich(&["nullsolve", "--system", "ex8.json", "--at", "0.001,0.001"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "x1 = (0, 1)");
}

#[test]
fn generated_system_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    let path = path.to_str().unwrap();
    let g = rellich(&["gen", "--seed", "0", "--n", "3", "--num-params", "2", "--output", path]);
    assert_eq!(g.status.code(), Some(0), "{}", stderr(&g));
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("gen-n3-N2"));

    let v = rellich(&["sens", "verify", "--system", path, "--at", "0.3,0.7"]);
    assert_eq!(v.status.code(), Some(0), "{}{}", stdout(&v), stderr(&v));
    assert!(stdout(&v).contains("verdict: pass"));

    let csv = rellich(&["sens", "verify", "--system", path, "--at", "0.3,0.7", "--format", "csv"]);
    assert!(stdout(&csv).trim_end().ends_with("# verdict,pass"));
}

#[test]
fn direct_and_adjoint_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    let path = path.to_str().unwrap();
    rellich(&["gen", "--seed", "4", "--n", "4", "--num-params", "3", "--output", path]);
    let d = rellich(&["sens", "direct", "--system", path, "--at", "0.1,-0.2,0.3", "--format", "json"]);
    let d: serde_json::Value = serde_json::from_slice(&d.stdout).unwrap();
    for i in 1..=4 {
        let obj = format!("coord:{i}");
        let a = rellich(&[
            "sens", "adjoint", "--system", path, "--at", "0.1,-0.2,0.3", "--objective", &obj, "--format", "json",
        ]);
        let a: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(a["solve_count"], 1);
        for j in 0..3 {
            let dv = d["jacobian"][i - 1][j].as_f64().unwrap();
            let av = a["derivatives"][j]["value"].as_f64().unwrap();
            assert!((dv - av).abs() <= 1e-10 * (1.0 + dv.abs()), "{dv} vs {av}");
        }
    }
    assert_eq!(d["solve_count"], 3);
}

#[test]
fn corpus_show_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let o = rellich(&["corpus", "show", "ex8", "--format", "json"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let o = rellich(&["nullsolve", "--system", path.to_str().unwrap(), "--at", "1,0"]);
    assert_eq!(stdout(&o).trim(), "x1 = (1, 0)");
}

#[test]
fn high_deficiency_is_a_domain_error() {
    let o = rellich(&["sens", "direct", "--system", "ex20", "--at", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("deficiency 3 > 1"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let o = rellich(&["frame", "--system", "ex8", "--at", "1,0", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rellich(&["rank", "--system", "ex8", "--at", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage: rellich rank"));
    let o = rellich(&["frame", "--system", "nope", "--at", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rellich(&["rank", "--system", "ex8", "--at", "1,0", "--tol", "-3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_rellich"))
        .args(["rank", "--system", "ex8", "--at", "1e-3,0", "--format", "json"])
        .env("RELLICH_SENS_TOL", "0.5")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tol"], 0.5);
    assert_eq!(v["rank"], 0);
}

#[test]
fn solve_and_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let sys = r#"{"name": "shifted", "n": 2, "N": 1,
        "entries": [
          {"row": 0, "col": 0, "monomials": [{"coeff": 1.0, "powers": [0]}]},
          {"row": 0, "col": 1, "monomials": [{"coeff": 1.0, "powers": [0]}]},
          {"row": 1, "col": 0, "monomials": [{"coeff": 2.0, "powers": [0]}]},
          {"row": 1, "col": 1, "monomials": [{"coeff": 2.0, "powers": [0]}]}
        ],
        "rhs": [
          {"index": 0, "monomials": [{"coeff": 1.0, "powers": [0]}]},
          {"index": 1, "monomials": [{"coeff": 2.0, "powers": [0]}]}
        ]}"#;
    std::fs::write(&path, sys).unwrap();
    let p = path.to_str().unwrap();
    let o = rellich(&["solve", "--system", p, "--at", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    let o = rellich(&["decompose", "--system", p, "--at", "0", "--x", "3,-2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["is_solution"], true);
    let o = rellich(&["decompose", "--system", p, "--at", "0", "--x", "3,2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["is_solution"], false);
}

#[test]
fn corpus_runs_clean() {
    let o = rellich(&["corpus", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let o = rellich(&["corpus", "list"]);
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn track_csv_has_a_row_per_point() {
    let o = rellich(&["track", "--system", "ex8", "--path", "1,0;0.9,0.1;0.8,0.2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count() >= 3, "{out}");
}

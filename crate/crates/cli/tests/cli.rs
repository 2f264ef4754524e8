use std::path::Path;
use std::process::{Command, Output};

use string_pe_cli::csvio::read_rows;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_string-pe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_rope_passes() {
    let out = run(&["verify", "--suite", "rope", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 4);
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_rejects_unknown_suite() {
    let out = run(&["verify", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_tolerance_override_reports_failures() {
    let out = run(&["verify", "--suite", "circulant", "--tol", "1e-20"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL circulant/fft_vs_dense_oracle value="), "{text}");
}

#[test]
fn verify_output_is_deterministic() {
    let a = run(&["verify", "--suite", "attention", "--seed", "4", "--json"]);
    let b = run(&["verify", "--suite", "attention", "--seed", "4", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 4);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn encode_rope_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"variant":"rope","dim":2,"coord_dim":1,"schedule":[[1.5707963267948966]]}"#);
    let pos = write(dir.path(), "p.csv", "1\n");
    let tok = write(dir.path(), "t.csv", "1,0\n");
    let out_path = dir.path().join("o.csv");
    let out = run(&["encode", "--config", &cfg, "--positions", &pos, "--tokens", &tok, "-o", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(&out_path).unwrap();
    assert!(rows[0][0].abs() < 1e-15 && (rows[0][1] - 1.0).abs() < 1e-15);
}

#[test]
fn encode_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"variant":"rope","dim":2,"coord_dim":1}"#);
    let tok = write(dir.path(), "t.csv", "1,0\n");
    let o = dir.path().join("o.csv");
    let o = o.to_str().unwrap();

    let pos = write(dir.path(), "p.csv", "1\n2\n");
    let out = run(&["encode", "--config", &cfg, "--positions", &pos, "--tokens", &tok, "-o", o]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("2 position rows") && err.contains("1 token rows"), "{err}");

    let bad = write(dir.path(), "bad.csv", "1\nq\n");
    let out = run(&["encode", "--config", &cfg, "--positions", &bad, "--tokens", &tok, "-o", o]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));

    let wide = write(dir.path(), "wide.csv", "1,2\n");
    let out = run(&["encode", "--config", &cfg, "--positions", &wide, "--tokens", &tok, "-o", o]);
    assert_eq!(out.status.code(), Some(2));

    let badcfg = write(dir.path(), "bad.json", r#"{"variant":"cayley","dim":2,"coord_dim":1}"#);
    let pos = write(dir.path(), "p1.csv", "1\n");
    let out = run(&["encode", "--config", &badcfg, "--positions", &pos, "--tokens", &tok, "-o", o]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn encode_round_trip_with_negated_positions() {
    let dir = tempfile::tempdir().unwrap();
    let mut positions = String::new();
    let mut negated = String::new();
    let mut tokens = String::new();
    for i in 0..12 {
        let (a, b) = (0.37 * i as f64 - 2.0, 1.3 - 0.21 * i as f64);
        positions += &format!("{a},{b}\n");
        negated += &format!("{},{}\n", -a, -b);
        let t: Vec<String> = (0..6).map(|k| format!("{}", ((i * 6 + k) as f64).sin())).collect();
        tokens += &(t.join(",") + "\n");
    }
    let pos = write(dir.path(), "p.csv", &positions);
    let neg = write(dir.path(), "n.csv", &negated);
    let tok = write(dir.path(), "t.csv", &tokens);
    for variant in ["rope", "dense", "cayley", "circulant"] {
        let cfg = write(dir.path(), "c.json", &format!(r#"{{"variant":"{variant}","dim":6,"coord_dim":2,"seed":5}}"#));
        let mid = dir.path().join("mid.csv");
        let back = dir.path().join("back.csv");
        let (mid_s, back_s) = (mid.to_str().unwrap(), back.to_str().unwrap());
        assert!(run(&["encode", "--config", &cfg, "--positions", &pos, "--tokens", &tok, "-o", mid_s]).status.success());
        assert!(run(&["encode", "--config", &cfg, "--positions", &neg, "--tokens", mid_s, "-o", back_s]).status.success());
        let (want, got) = (read_rows(Path::new(&tok)).unwrap(), read_rows(&back).unwrap());
        for (w, g) in want.iter().zip(&got) {
            for (x, y) in w.iter().zip(g) {
                assert!((x - y).abs() < 1e-9, "{variant}");
            }
        }
    }
}

#[test]
fn bench_single_row_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("b.csv");
    let out = run(&["bench", "--variants", "rope", "--dims", "8", "--tokens", "4", "-o", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&o).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "variant,dim,tokens,ns_per_apply,state_bytes");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("rope,8,4,"));

    for args in [
        vec!["bench", "--tokens", "0", "-o", "x.csv"],
        vec!["bench", "--dims", "5", "-o", "x.csv"],
        vec!["bench", "--variants", "nope", "-o", "x.csv"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    let out = run(&["bench", "--dims", "4", "--tokens", "1", "-o", "/nonexistent-dir/b.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

fn symlab(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_symlab"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SNAKE: &str = r#"{"experiment": "snake", "seed": 1, "snake": {"n_values": [2, 4, 8, 16], "max_log2": 100}}"#;

#[test]
fn snake_run_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SNAKE);
    let out = dir.path().join("out");
    let o = symlab(&["snake", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("snake.csv")).unwrap();
    assert!(csv.starts_with("n,delta,amplitude,t,"));
    assert_eq!(csv.lines().count(), 5);
    assert!(out.join("snake.json").exists() && out.join("snake_scan.dat").exists());
}

#[test]
fn config_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"experiment": "classify", "seed": 0, "matrices": [{"dim": 2, "rows": [[2, 1], [1, 1]]}]}"#;
    let o = symlab(&["classify", "--out", dir.path().to_str().unwrap()], Some(cfg));
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("classify.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0,HyperbolicDiagonalizable,"));
}

#[test]
fn malformed_json_reports_position() {
    let o = symlab(&["entropy"], Some("{\n  \"experiment\": \"entropy\",\n  \"seed\": 1,,\n}"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = symlab(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let o = symlab(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("inequality"));
}

#[test]
fn config_errors_exit_two() {
    // subcommand and config disagree
    assert_eq!(symlab(&["orbits"], Some(SNAKE)).status.code(), Some(2));
    // missing seed
    assert_eq!(symlab(&["snake"], Some(r#"{"experiment": "snake"}"#)).status.code(), Some(2));
    // unknown field
    assert_eq!(symlab(&["snake"], Some(r#"{"experiment": "snake", "seed": 1, "bogus": 3}"#)).status.code(), Some(2));
    // entropy without a map
    assert_eq!(symlab(&["entropy"], Some(r#"{"experiment": "entropy", "seed": 1}"#)).status.code(), Some(2));
    // missing file
    assert_eq!(symlab(&["snake", "--config", "/nonexistent/x.json"], None).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    // amplitude 2rδ/(πN) is not below r for δ = 10, N = 2
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"experiment": "snake", "seed": 1, "snake": {"delta": 10.0, "n_values": [2]}}"#;
    let o = symlab(&["snake", "--out", dir.path().to_str().unwrap()], Some(cfg));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    // a non-symplectic matrix
    let cfg = r#"{"experiment": "classify", "seed": 0, "matrices": [{"dim": 2, "rows": [[2, 0], [0, 2]]}]}"#;
    let o = symlab(&["classify", "--out", dir.path().to_str().unwrap()], Some(cfg));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"experiment": "diagonalize", "seed": 1, "diagonalize": {"random": {"count": 2, "max_len": 4}}}"#;
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(symlab(&["diagonalize", "--out", a.to_str().unwrap()], Some(cfg)).status.code(), Some(0));
    assert_eq!(symlab(&["diagonalize", "--seed", "2", "--out", b.to_str().unwrap()], Some(cfg)).status.code(), Some(0));
    let ja = std::fs::read_to_string(a.join("diagonalize.json")).unwrap();
    let jb = std::fs::read_to_string(b.join("diagonalize.json")).unwrap();
    assert!(ja.contains("\"seed\": 1") && jb.contains("\"seed\": 2"));
    assert_ne!(ja, jb);
}

use symlab::config::{CenterMode, ConfigError, Experiment, ExperimentConfig};
use symlab::io::*;
use symlab_core::linalg::Mat;

#[test]
fn matrix_csv_round_trip() {
    let m = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0 / 3.0]);
    let text = matrix_csv(&m);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(matrix_from_csv(&text).unwrap(), m);
    assert!(matrix_from_csv("1,2\n3\n").is_err());
}

#[test]
fn matrix_json_shape() {
    let m = Mat::identity(2, 2);
    let v: serde_json::Value = serde_json::from_str(&matrix_json(&m)).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["rows"][1][1], 1.0);
}

#[test]
fn csv_has_header_and_quotes() {
    let s = csv_string(&["a", "b"], &[vec!["x,y".into(), "1".into()]]);
    assert_eq!(s, "a,b\n\"x,y\",1\n");
}

#[test]
fn small_floats_use_exponents() {
    assert_eq!(num(5e-16), "5e-16");
    assert_eq!(num(0.25), "0.25");
    assert_eq!(join_floats(&[1.0, -2.5]), "1.0 -2.5");
}

#[test]
fn files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("x/y");
    write_files(&sub, &[("a.txt".into(), "hi\n".into())]).unwrap();
    assert_eq!(std::fs::read_to_string(sub.join("a.txt")).unwrap(), "hi\n");
}

#[test]
fn config_defaults() {
    let c = ExperimentConfig::from_json(r#"{"experiment": "inequality", "seed": 4, "map": {"kind": "toral", "params": {"matrix": [[2,1],[1,1]]}}}"#).unwrap();
    assert_eq!(c.experiment, Experiment::Inequality);
    assert_eq!(c.inequality.center, CenterMode::Gap);
    assert_eq!(c.entropy.eps, vec![0.05, 0.1, 0.2]);
    assert_eq!(c.entropy.n, (1..=14).collect::<Vec<_>>());
    assert_eq!(c.snake.n_values, vec![2, 4, 8, 16]);
}

#[test]
fn config_errors() {
    let parse = |t: &str| ExperimentConfig::from_json(t).unwrap_err();
    assert!(matches!(parse("{\"experiment\": \"snake\",\n \"seed\": }"), ConfigError::Parse { line: 2, .. }));
    assert!(matches!(parse(r#"{"experiment": "nope", "seed": 1}"#), ConfigError::Parse { .. }));
    assert!(matches!(parse(r#"{"experiment": "classify", "seed": 1}"#), ConfigError::Invalid(_)));
    assert!(matches!(parse(r#"{"experiment": "scan", "seed": 1}"#), ConfigError::Invalid(_)));
    assert!(matches!(parse(r#"{"experiment": "diagonalize", "seed": 1}"#), ConfigError::Invalid(_)));
    let bad_eps = r#"{"experiment": "diagonalize", "seed": 1, "diagonalize": {"random": {}, "eps": 0.0}}"#;
    assert!(matches!(parse(bad_eps), ConfigError::Invalid(_)));
    let bad_grid = r#"{"experiment": "entropy", "seed": 1, "map": {"kind": "toral", "params": {"matrix": [[2,1],[1,1]]}}, "entropy": {"eps": [0.2, 0.1]}}"#;
    assert!(matches!(parse(bad_grid), ConfigError::Invalid(_)));
    let bad_map = r#"{"experiment": "orbits", "seed": 1, "map": {"kind": "toral", "params": {"matrix": [[2,0],[0,2]]}}}"#;
    assert!(matches!(parse(bad_map), ConfigError::Invalid(_)));
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 7);
}

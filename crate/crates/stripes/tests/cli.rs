use std::path::Path;
use std::process::{Command, Output};
use stripes::io;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stripes")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn number_after(text: &str, marker: &str) -> f64 {
    let rest = &text[text.find(marker).unwrap() + marker.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn critical_constants() {
    let o = run(&["jc", "--d", "1", "--p", "3", "--tol", "1e-8"]);
    assert!(o.status.success());
    let v = number_after(&stdout(&o), "= ");
    assert!((v - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-8);

    let o = run(&["jc", "--d", "1", "--p", "4", "--continuum"]);
    assert!((number_after(&stdout(&o), "= ") - 1.0 / 3.0).abs() < 1e-10);

    let o = run(&["jc", "--d", "1", "--p", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p = 2 < d + 2"));
}

#[test]
fn unreachable_tolerance_exits_with_two() {
    let o = run(&["jc", "--d", "3", "--p", "5", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["jc", "--d", "1"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn decompose_empty_and_stripe_grids() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.grid", "2 4 0.5\n....\n....\n....\n....\n");
    let o = run(&["decompose", "--grid", &empty, "--p", "4", "--tau", "0.2", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let values = text.lines().nth(1).unwrap();
    assert!(values.split(',').all(|v| v.parse::<f64>().unwrap() == 0.0), "{text}");

    let stripes = write(dir.path(), "s.grid", "2 4 0.5\n##..\n##..\n##..\n##..\n");
    let o = run(&["decompose", "--grid", &stripes, "--p", "4", "--tau", "0.2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["i_1"].as_f64().unwrap(), 0.0);

    let o = run(&["eval", "--grid", &stripes, "--p", "4", "--tau", "0.2"]);
    let e: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((e["total"].as_f64().unwrap() - v["total"].as_f64().unwrap()).abs() < 1e-14);
}

#[test]
fn malformed_grid_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.grid", "2 4 0.5\n##..\n##.\n");
    let o = run(&["eval", "--grid", &bad, "--p", "4"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stripe_sweep_csv() {
    let o = run(&["stripes", "--p", "3", "--tau", "0.1,0,0.01"]);
    assert!(o.status.success());
    let rows = io::sweep_from_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].tau, 0.0);
    assert!((rows[0].h_star - 4.0 * 2f64.ln()).abs() < 1e-8);
    assert!(rows.windows(2).all(|w| w[0].tau < w[1].tau && w[0].h_star > w[1].h_star));

    let o = run(&["stripes", "--p", "3", "--tau", "0.1", "--h-min", "5", "--h-max", "1"]);
    assert!(!o.status.success());
}

#[test]
fn exhaustive_search_reports_stripes() {
    let o = run(&["search", "--d", "1", "--p", "3", "--tau", "0.25", "--n", "8"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["visited"].as_u64(), Some(256));
    for m in v["minimizers"].as_array().unwrap() {
        assert_eq!(m["is_stripe"], true);
        io::grid_from_str(m["grid"].as_str().unwrap()).unwrap();
    }
}

#[test]
fn seeded_anneal_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "anneal", "--d", "2", "--p", "4", "--tau", "0.15", "--n", "8", "--steps", "20000", "--seed", "9",
            "--restarts", "3", "--out", out,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let argv = args(p.to_str().unwrap());
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert!(run(&argv).status.success());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn regions_of_a_stripe_fixture_use_one_label() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..16).map(|_| "##..##..##..##..\n").collect();
    let grid = write(dir.path(), "s.grid", &format!("2 16 1\n{rows}"));
    let o = run(&["regions", "--grid", &grid, "--l", "4", "--eta", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (d, n, _, labels) = io::regions_from_str(&text).unwrap();
    assert_eq!((d, n), (2, 16));
    assert!(labels.iter().all(|&l| l == labels[0]) && labels[0].to_char() == '1');
}

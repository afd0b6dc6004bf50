//! End-to-end tests of the command-line surface: exit codes, JSON shapes,
//! golden values and seed determinism.

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasiperm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn density_in_permutation() {
    let out = run(&["density", "--pattern", "12", "--in", "231"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout_json(&out)["value"], "1/3");
}

#[test]
fn density_uniform_matrix() {
    let out = run(&["density", "--pattern", "123", "--uniform", "4"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout_json(&out)["value"], "1/6");
}

#[test]
fn density_from_matrix_file() {
    let dir = std::env::temp_dir().join("quasiperm-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("identity2.json");
    std::fs::write(&path, r#"{"n":2,"rows":[["1","0"],["0","1"]]}"#).unwrap();
    let out = run(&[
        "density",
        "--pattern",
        "12",
        "--matrix",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout_json(&out)["value"], "3/4");
}

#[test]
fn density_monte_carlo_estimate() {
    let out = run(&[
        "density",
        "--pattern",
        "123",
        "--alpha",
        "0",
        "--samples",
        "200000",
        "--seed",
        "7",
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    let est = v["estimate"].as_f64().unwrap();
    let se = v["stderr"].as_f64().unwrap();
    assert!((est - 0.25).abs() <= 4.0 * se, "estimate {est}");
    assert_eq!(v["samples"], 200_000);
    assert_eq!(v["seed"], 7);
    assert!(v["timestamp"].is_string());
}

#[test]
fn density_requires_exactly_one_source() {
    let out = run(&["density", "--pattern", "12"]);
    assert_eq!(exit_code(&out), 2);
    let out = run(&[
        "density",
        "--pattern",
        "12",
        "--in",
        "231",
        "--uniform",
        "3",
    ]);
    assert_eq!(exit_code(&out), 2);
    let out = run(&["density", "--pattern", "99", "--in", "231"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn gradpoly_goldens() {
    let out = run(&["gradpoly", "12"]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["k"], 2);
    assert_eq!(v["coeffs"][0][0], "4");

    let out = run(&["gradpoly", "21"]);
    assert_eq!(stdout_json(&out)["coeffs"][0][0], "-4");

    let out = run(&["gradpoly", "123"]);
    let v = stdout_json(&out);
    assert_eq!(v["coeffs"][0], serde_json::json!(["12", "-18"]));
    assert_eq!(v["coeffs"][1], serde_json::json!(["-18", "36"]));

    let out = run(&["gradpoly", "123", "--mirror"]);
    let v = stdout_json(&out);
    assert_eq!(v["coeffs"][0][0], "-6");
}

#[test]
fn gradpoly_rejects_order_one() {
    let out = run(&["gradpoly", "1"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn depcheck_exit_codes() {
    let out = run(&["depcheck", "12"]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["status"], "independent");
    assert_eq!(v["certificate"]["rank"], 1);

    let out = run(&["depcheck", "12", "21"]);
    assert_eq!(exit_code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["status"], "dependent");
    assert_eq!(v["kernel"], serde_json::json!(["1", "1"]));

    let out = run(&["depcheck", "1"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn search_streams_reports() {
    let out = run(&["search", "--size", "2", "--max-order", "5"]);
    assert_eq!(exit_code(&out), 0);
    let lines: Vec<&str> = std::str::from_utf8(&out.stdout).unwrap().lines().collect();
    assert_eq!(lines.len(), 1);
    let v: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["set"], serde_json::json!(["12", "21"]));

    let out = run(&["search", "--size", "1", "--max-order", "5"]);
    assert_eq!(exit_code(&out), 0);
    assert!(out.stdout.is_empty());

    let out = run(&["search", "--size", "4", "--max-order", "3"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn witness_constructs_and_verifies() {
    let out = run(&["witness", "12", "--n", "3"]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert!(v["x_max_norm"].as_f64().unwrap() >= 1e-3);
    assert_eq!(v["verification"]["pass"], true);
    assert_eq!(v["verification"]["is_witness"], true);
    assert_eq!(v["n"], 3);
    for r in v["residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn witness_refuses_dependent_sets() {
    let out = run(&["witness", "12", "21"]);
    assert_eq!(exit_code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["refused"], true);
}

#[test]
fn malpha_locates_the_balanced_parameter() {
    let out = run(&[
        "malpha",
        "--samples",
        "60000",
        "--tol",
        "0.01",
        "--seed",
        "11",
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    let alpha0 = v["alpha0"].as_f64().unwrap();
    assert!(alpha0 > 0.0 && alpha0 < 1.0);
    for (_, d) in v["densities"].as_object().unwrap() {
        let est = d["estimate"].as_f64().unwrap();
        assert!((est - 1.0 / 6.0).abs() < 0.02, "density {est}");
    }
    assert!((v["endpoints"]["alpha_0"]["estimate"].as_f64().unwrap() - 0.25).abs() < 0.02);
    assert!((v["endpoints"]["alpha_1"]["estimate"].as_f64().unwrap() - 0.125).abs() < 0.02);
}

#[test]
fn verify_lemmas_all_pass() {
    let out = run(&["verify-lemmas", "--max-order", "3"]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 6);
}

#[test]
fn identical_seeds_give_identical_output() {
    let args = [
        "density",
        "--pattern",
        "123",
        "--alpha",
        "0.5",
        "--samples",
        "50000",
        "--seed",
        "42",
    ];
    let strip = |out: &Output| {
        let mut v = stdout_json(out);
        v.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&v).unwrap()
    };
    let a = run(&args);
    let b = run(&args);
    assert_eq!(strip(&a), strip(&b));

    // Thread count must not change the result either.
    let mut threaded = vec!["--threads", "2"];
    threaded.extend_from_slice(&args);
    let c = run(&threaded);
    assert_eq!(strip(&a), strip(&c));

    let m1 = run(&[
        "malpha",
        "--samples",
        "30000",
        "--tol",
        "0.02",
        "--seed",
        "3",
    ]);
    let m2 = run(&[
        "malpha",
        "--samples",
        "30000",
        "--tol",
        "0.02",
        "--seed",
        "3",
    ]);
    assert_eq!(
        stdout_json(&m1)["alpha0"].as_f64().unwrap(),
        stdout_json(&m2)["alpha0"].as_f64().unwrap()
    );
}

#[test]
fn sample_dumps_csv() {
    let out = run(&["sample", "--alpha", "0.5", "--count", "500", "--seed", "9"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y"));
    let mut count = 0;
    for line in lines {
        let (x, y) = line.split_once(',').expect("two columns");
        let x: f64 = x.parse().unwrap();
        let y: f64 = y.parse().unwrap();
        // Support membership for the half-parameter family.
        let on_line = [
            x + y - 0.25,
            x + y - 0.75,
            x + y - 1.25,
            x + y - 1.75,
            y - x - 0.25,
            y - x + 0.25,
            y - x - 0.75,
            y - x + 0.75,
        ]
        .iter()
        .any(|d| d.abs() < 1e-12);
        assert!(on_line, "({x},{y}) off support");
        count += 1;
    }
    assert_eq!(count, 500);

    let out = run(&["sample", "--count", "5"]);
    assert_eq!(exit_code(&out), 2);
}

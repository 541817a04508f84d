use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "examples", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn solver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solver"))
        .args(args)
        .output()
        .expect("spawn solver")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn classify_reports_thresholds() {
    let v = json(&solver(&["classify", "--config", &example("row2.json")]));
    assert_eq!(v["regime"], "B1");
    assert!((v["gamma1"].as_f64().unwrap() - 1.0078125).abs() < 1e-12);
    assert!((v["gamma2"].as_f64().unwrap() - 0.3979).abs() < 5e-4);
    let v = json(&solver(&[
        "classify",
        "--config",
        &example("row1.json"),
        "--gamma",
        "2^-2.4",
    ]));
    assert_eq!(v["regime"], "A2");
}

#[test]
fn solve_matches_reference_barrier() {
    let v = json(&solver(&["solve", "--config", &example("row2.json")]));
    assert!((v["b"].as_f64().unwrap() - 0.0862).abs() < 1.5e-3);
    assert!((v["x_switch"].as_f64().unwrap() - 0.0512).abs() < 1.5e-3);
    assert_eq!(v["optimal"], true);
}

#[test]
fn flags_override_and_replace_config() {
    let v = json(&solver(&[
        "solve", "--delta", "1.5", "--sigma", "0.5", "--mu", "0.7", "--eta", "0.7", "--gamma",
        "2^0.8",
    ]));
    assert!((v["b"].as_f64().unwrap() - 0.0833).abs() < 1.5e-3);
    let v = json(&solver(&[
        "solve",
        "--config",
        &example("row3.json"),
        "--gamma",
        "2^0.8",
    ]));
    assert!((v["b"].as_f64().unwrap() - 0.0833).abs() < 1.5e-3);
}

#[test]
fn curve_is_csv_with_full_retention_on_row1() {
    let out = solver(&[
        "curve",
        "--config",
        &example("row1.json"),
        "--x-steps",
        "50",
    ]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let t = rows(&out);
    assert_eq!(t[0], ["x", "v", "v_prime", "v_double_prime", "u_star"]);
    assert_eq!(t.len(), 51);
    for r in &t[1..] {
        assert_eq!(r[4], "1");
        let sig: String = r[1]
            .chars()
            .take_while(|c| *c != 'e')
            .filter(char::is_ascii_digit)
            .collect();
        assert!(sig.trim_start_matches('0').len() <= 10, "{}", r[1]);
    }
}

#[test]
fn sweep_gamma_endpoint_approaches_limit() {
    let t = rows(&solver(&[
        "sweep-gamma",
        "--config",
        &example("row2.json"),
        "--n-min",
        "48",
        "--n-max",
        "50",
        "--n-step",
        "1",
    ]));
    assert_eq!(t[0], ["gamma", "b", "x_switch", "v_at_b", "v_at_x_switch"]);
    let last = t.last().unwrap();
    let f = |i: usize| last[i].parse::<f64>().unwrap();
    assert!((f(1) - 0.2131).abs() < 1.5e-3);
    assert!((f(2) - 0.0512).abs() < 1.5e-3);
    assert!((f(3) - 0.3333).abs() < 1.5e-3);
    assert!((f(4) - 0.1299).abs() < 1.5e-3);
}

#[test]
fn sweep_barrier_never_beats_optimum() {
    let t = rows(&solver(&[
        "sweep-barrier",
        "--config",
        &example("row3.json"),
    ]));
    assert_eq!(t[0], ["b", "x", "v", "v_optimal"]);
    for r in &t[1..] {
        let v: f64 = r[2].parse().unwrap();
        let best: f64 = r[3].parse().unwrap();
        assert!(v <= best * (1.0 + 1e-9), "{:?}", r);
    }
}

#[test]
fn verify_exit_codes() {
    for cfg in ["row1.json", "row2.json", "row3.json"] {
        let out = solver(&["verify", "--config", &example(cfg)]);
        assert_eq!(out.status.code(), Some(0), "{}", cfg);
        let out = solver(&["verify", "--config", &example(cfg), "--gamma", "inf"]);
        assert_eq!(out.status.code(), Some(0), "{} limit", cfg);
        let out = solver(&[
            "verify",
            "--config",
            &example(cfg),
            "--perturb-barrier",
            "0.01",
        ]);
        assert_eq!(out.status.code(), Some(1), "{} perturbed", cfg);
    }
}

#[test]
fn usage_and_domain_errors_exit_2() {
    let bad = solver(&[
        "solve",
        "--delta=-1",
        "--sigma",
        "0.3",
        "--mu",
        "1",
        "--eta",
        "0.2",
        "--gamma",
        "2",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
    let eta_too_big = solver(&["solve", "--config", &example("row1.json"), "--eta", "1.5"]);
    assert_eq!(eta_too_big.status.code(), Some(2));
    let missing = solver(&["solve", "--gamma", "2"]);
    assert_eq!(missing.status.code(), Some(2));
    let no_file = solver(&["solve", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(no_file.status.code(), Some(2));
    let bad_gamma = solver(&["solve", "--config", &example("row1.json"), "--gamma", "2^x"]);
    assert_eq!(bad_gamma.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let args = [
        "simulate",
        "--config",
        &example("row1.json"),
        "--paths",
        "400",
        "--seed",
        "7",
    ];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_solver"))
            .args(args)
            .env("SOLVER_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("4");
    let c = run("4");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let v = json(&a);
    let est = v["npv_mean"].as_f64().unwrap();
    let se = v["npv_stderr"].as_f64().unwrap();
    let exact = v["closed_form"].as_f64().unwrap();
    assert!((est - exact).abs() < 5.0 * se);
}

#[test]
fn json_round_trips_floats() {
    let out = solver(&["solve", "--config", &example("row2.json")]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let b = v["b"].as_f64().unwrap();
    assert!(text.contains(&serde_json::to_string(&b).unwrap()));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("solver-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("curve.csv");
    let out = solver(&[
        "curve",
        "--config",
        &example("row3.json"),
        "--x-steps",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 6);
    std::fs::remove_dir_all(&dir).unwrap();
}

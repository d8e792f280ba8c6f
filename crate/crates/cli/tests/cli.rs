use std::fs;
use std::process::{Command, Output};

use betaop_core::spectral::make_u_tilde;
use betaop_core::{BetaParams, PiecewisePoly, QuadNum};
use serde_json::Value;

fn betaop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betaop"))
        .args(args)
        .env_remove("BETAOP_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn eigen_check_golden_prints_leading_eigenvalues() {
    let o = betaop(&["eigen-check", "--a0", "1", "--a1", "1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["passed"], true);
    let exact: Vec<&str> = doc["eigenvalues"].as_array().unwrap().iter().map(|e| e["exact"].as_str().unwrap()).collect();
    // 1, -1/beta^2, 1/beta in Q(beta) with beta^2 = beta + 1
    assert_eq!(&exact[..3], ["1", "-2+beta", "-1+beta"]);
}

#[test]
fn eigen_check_rejects_a1_above_a0() {
    let o = betaop(&["eigen-check", "--a0", "1", "--a1", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a0 >= a1"));
}

#[test]
fn eigen_check_nu_three() {
    let o = betaop(&["eigen-check", "--a0", "3", "--a1", "2", "--nu", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["eigenvalues"].as_array().unwrap().len(), 6);
    assert!(doc["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn iterate_psi1_matches_the_counterexample_identity() {
    let o = betaop(&["iterate", "-f", "psi1", "-k", "3", "--format", "json", "--samples", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let g = PiecewisePoly::from_json(&json(&o)["function"]).unwrap();
    let params = BetaParams::golden();
    let [u1, u2, _] = make_u_tilde(params).unwrap();
    let b = QuadNum::beta(params);
    let lambda = -(&QuadNum::one(params) / &(&b * &b));
    assert!(g.equal_ae(&u1.add(&u2.scale(&lambda.pow(3))).unwrap()));
}

#[test]
fn iterate_zero_echoes_a_json_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.json");
    let f = r#"{"schema":1,"a0":2,"a1":1,"breakpoints":["0","1/3","1"],"pieces":[["1","2"],["-1/2+beta"]]}"#;
    fs::write(&input, f).unwrap();
    let o = betaop(&["iterate", "--a0", "2", "--a1", "1", "-f", input.to_str().unwrap(), "-k", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let original = PiecewisePoly::from_json(&serde_json::from_str(f).unwrap()).unwrap();
    assert_eq!(PiecewisePoly::from_json(&json(&o)["function"]).unwrap(), original);
}

#[test]
fn iterate_quadratic_writes_1001_rows() {
    let o = betaop(&["iterate", "-f", "quadratic", "-k", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,value");
    assert_eq!(lines.len(), 1002);
    assert!(lines[1].starts_with("0.00000000000000e0,"));
}

#[test]
fn iterate_numeric_agrees_with_exact() {
    let exact = stdout(&betaop(&["iterate", "--a0", "2", "-f", "linear", "-k", "6", "--samples", "21"]));
    let numeric = stdout(&betaop(&["iterate", "--a0", "2", "-f", "linear", "-k", "6", "--samples", "21", "--engine", "numeric"]));
    for (a, b) in exact.lines().zip(numeric.lines()).skip(1) {
        let va: f64 = a.split(',').nth(1).unwrap().parse().unwrap();
        let vb: f64 = b.split(',').nth(1).unwrap().parse().unwrap();
        assert!((va - vb).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn unknown_function_and_bad_json_are_usage_errors() {
    assert_eq!(betaop(&["iterate", "-f", "cosh"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema\": 1, \"a0\": 1").unwrap();
    assert_eq!(betaop(&["iterate", "-f", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(betaop(&["iterate", "-f", "exp-normalized"]).status.code(), Some(2));
}

#[test]
fn asymptotics_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res.csv");
    let o = betaop(&["asymptotics", "-f", "quadratic", "--k-max", "12", "--check", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,residual_lower,residual_upper,beta_power_bound,ratio"));
    assert_eq!(lines.count(), 12);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["command"], "asymptotics");
    assert_eq!(manifest["parameters"]["a0"], 1);
    assert_eq!(manifest["exit_code"], 0);
    assert!(manifest["elapsed_ms"].as_f64().is_some());
}

#[test]
fn asymptotics_one_term_rate_is_ln_beta() {
    let o = betaop(&["asymptotics", "-f", "linear", "--expansion", "one-term", "--check", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let slope: f64 = json(&o)["fit"]["fitted_slope"].as_str().unwrap().parse().unwrap();
    assert!((slope + BetaParams::golden().beta_f64().ln()).abs() < 0.05);
}

#[test]
fn asymptotics_rejects_small_n() {
    let o = betaop(&["asymptotics", "-n", "6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_budget_exhaustion_exits_3() {
    let o = betaop(&["asymptotics", "-f", "linear", "--max-pieces", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = betaop(&["partition-dump", "--a0", "5", "--a1", "5", "-m", "16"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn partition_dump_golden_level_two() {
    let o = betaop(&["partition-dump", "-m", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let values: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(3).unwrap().to_string()).collect();
    // 0, beta^-2, beta^-1, 1
    assert_eq!(values, ["0", "2-beta", "-1+beta", "1"]);
}

#[test]
fn bernoulli_table_second_row() {
    let o = betaop(&["bernoulli-table", "-n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().nth(3), Some("2,1/6 -1 1"));
}

#[test]
fn integer_base_sin_rate() {
    let o = betaop(&["integer-base", "-f", "sin", "-q", "2", "-n", "3", "--k-min", "6", "--k-max", "10", "--grid", "11", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["fit"]["eigenrelation"], true);
    let slope: f64 = doc["fit"]["fitted_slope"].as_str().unwrap().parse().unwrap();
    assert!((slope + 4.0 * 2f64.ln()).abs() < 0.01, "slope {slope}");
}

#[test]
fn block_and_markov_checks_pass() {
    assert_eq!(betaop(&["block-check", "--a0", "2", "-m", "3"]).status.code(), Some(0));
    assert_eq!(betaop(&["markov-check", "--samples", "50"]).status.code(), Some(0));
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["markov-check", "--samples", "20", "--seed", "3", "--json"][..],
        &["asymptotics", "-f", "exp-normalized", "--engine", "numeric", "--k-max", "8", "--grid", "101"][..],
        &["partition-dump", "--a0", "3", "--a1", "2", "-m", "3", "--format", "json"][..],
    ] {
        assert_eq!(betaop(args).stdout, betaop(args).stdout, "{args:?}");
    }
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_betaop"))
        .args(["bernoulli-table", "-o", out.to_str().unwrap()])
        .env("BETAOP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
}

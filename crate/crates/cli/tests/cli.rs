use std::process::{Command, Output};

use recest::models::iid_scheme;
use recest::{simulate, Matrix64, ParamVec64};
use recest_cli::commands::{ktrace_csv, ktrace_rows};
use serde_json::Value;

fn recest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recest"))
        .args(args)
        .env_remove("RECEST_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_writes_one_row_per_step() {
    let out = recest(&[
        "simulate", "--model", "cauchy", "--theta", "1", "--theta0", "0", "--t-max", "100",
        "--seed", "42",
    ]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(
        header,
        [
            "t",
            "x",
            "theta_hat",
            "gamma",
            "psi",
            "increment",
            "skipped"
        ]
    );
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[99][0], "100");
    // Γ_t = t/2 for the Cauchy recursion.
    assert_eq!(rows[9][3].parse::<f64>().unwrap(), 5.0);
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate", "--model", "ar1", "--t-max", "300", "--seed", "9",
    ];
    let a = recest(&args);
    let b = recest(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = recest(&[
        "simulate", "--model", "ar1", "--t-max", "300", "--seed", "10",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn ar1_first_step_is_skipped() {
    let out = recest(&[
        "simulate", "--model", "ar1", "--theta", "0.5", "--t-max", "1",
    ]);
    assert_eq!(code(&out), 0);
    let (_, rows) = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][6], "1");
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn simulate_json_round_trips_floats() {
    let out = recest(&["simulate", "--t-max", "50", "--format", "json"]);
    let doc = json(&out);
    assert_eq!(doc["spec_version"], recest_cli::REPORT_SCHEMA_VERSION);
    let csv = recest(&["simulate", "--t-max", "50"]);
    let (_, rows) = csv_rows(&stdout(&csv));
    for (rec, row) in doc["records"].as_array().unwrap().iter().zip(&rows) {
        let from_json = rec["theta_hat"][0].as_f64().unwrap();
        let from_csv: f64 = row[2].parse().unwrap();
        assert_eq!(from_json.to_bits(), from_csv.to_bits());
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["simulate", "--t-max", "0"][..],
        &["simulate", "--model", "nosuch"],
        &["simulate", "--theta", "abc"],
        &["simulate", "--theta", "1,2"],
        &["rate", "--delta", "0.6"],
        &["rate", "--reps", "30", "--checkpoints", "10,100"],
        &["rate", "--reps", "30", "--checkpoints", "100,10,1000"],
        &["rate", "--reps", "10", "--checkpoints", "10,100,1000"],
        &["check", "--condition", "B1", "--model", "nosuch"],
        &["check", "--condition", "B7"],
        &["check", "--condition", "B1", "--model", "ar1"],
        &["check", "--condition", "M", "--model", "cauchy"],
        &["check", "--condition", "B1", "--c", "-1"],
        &["oracle", "--model", "ar1", "--quantity", "b", "--u", "1"],
        &["rate", "--threads", "0"],
        &["frobnicate"],
    ] {
        let out = recest(args);
        assert_eq!(
            code(&out),
            1,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(code(&recest(&["--help"])), 0);
}

#[test]
fn rate_report_schema() {
    let out = recest(&[
        "rate",
        "--reps",
        "40",
        "--checkpoints",
        "10,100,1000",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["command"], "rate");
    assert_eq!(doc["reps"], 40);
    let cps = doc["checkpoints"].as_array().unwrap();
    assert_eq!(cps.len(), 3);
    for cp in cps {
        let q = &cp["delta_abs"];
        assert!(q["q25"].as_f64() <= q["q50"].as_f64());
        assert!(q["q50"].as_f64() <= q["q75"].as_f64());
        assert!(cp.get("ratio_median").is_none());
    }
    assert!(doc["slope"]["slope"].as_f64().unwrap() < 0.0);
    assert!(doc["notes"][0].as_str().unwrap().contains("calibration"));
}

#[test]
fn rate_raw_rows_and_threads() {
    let base = [
        "rate",
        "--model",
        "ar1",
        "--reps",
        "30",
        "--checkpoints",
        "100,300,1000",
        "--format",
        "csv",
    ];
    let one = recest(&[&base[..], &["--threads", "1"]].concat());
    let many = Command::new(env!("CARGO_BIN_EXE_recest"))
        .args(base)
        .env("RECEST_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
    let (header, rows) = csv_rows(&stdout(&one));
    assert_eq!(header, ["rep", "t", "delta_abs", "scaled", "ratio"]);
    assert_eq!(rows.len(), 90);
    for row in &rows {
        let d: f64 = row[2].parse().unwrap();
        let s: f64 = row[3].parse().unwrap();
        let t: f64 = row[1].parse().unwrap();
        assert!((s - t.powf(0.4) * d).abs() <= 1e-12 * s);
        assert!(row[4].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn ar1_rate_ratio_near_ergodic_limit() {
    let out = recest(&["rate", "--model", "ar1", "--theta", "0.5", "--reps", "200"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let last = doc["checkpoints"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .clone();
    let ratio = last["ratio_median"].as_f64().unwrap();
    assert!((ratio - 4.0 / 3.0).abs() < 0.05 * 4.0 / 3.0, "{ratio}");
}

#[test]
fn check_b1_inside_and_outside() {
    let inside = recest(&[
        "check",
        "--model",
        "cauchy",
        "--condition",
        "B1",
        "--c",
        "1",
        "--u-max",
        "1.9",
    ]);
    assert_eq!(code(&inside), 0);
    assert_eq!(json(&inside)["verdict"], true);

    let outside = recest(&[
        "check",
        "--model",
        "cauchy",
        "--condition",
        "B1",
        "--u-max",
        "3",
    ]);
    assert_eq!(code(&outside), 2);
    let doc = json(&outside);
    assert_eq!(doc["verdict"], false);
    assert_eq!(doc["report"]["witnesses"]["u"].as_f64(), Some(3.0));
}

#[test]
fn check_b2_and_additive_conditions() {
    let b2 = recest(&[
        "check",
        "--condition",
        "B2",
        "--u-max",
        "1",
        "--n-points",
        "3",
    ]);
    assert_eq!(code(&b2), 0);
    let sup = json(&b2)["report"]["witnesses"]["sup"].as_f64().unwrap();
    assert!((sup - 2.24).abs() < 1e-12);
    let tight = recest(&["check", "--condition", "B2", "--threshold", "2"]);
    assert_eq!(code(&tight), 2);

    for cond in ["M", "G", "R"] {
        let out = recest(&[
            "check",
            "--model",
            "ar1",
            "--condition",
            cond,
            "--t-max",
            "5000",
        ]);
        assert_eq!(code(&out), 0, "{cond}");
        assert_eq!(json(&out)["report"]["condition"], cond);
    }
    let r = recest(&[
        "check",
        "--model",
        "cauchy",
        "--condition",
        "r",
        "--t-max",
        "5000",
    ]);
    assert_eq!(code(&r), 0);
}

#[test]
fn oracle_values() {
    let b = json(&recest(&[
        "oracle",
        "--model",
        "cauchy",
        "--quantity",
        "b",
        "--u",
        "1",
    ]));
    assert_eq!(b["closed_form"].as_f64(), Some(-0.4));
    assert!(b["abs_diff"].as_f64().unwrap() < 1e-6);

    let zero = json(&recest(&["oracle", "--quantity", "b", "--u", "0"]));
    assert_eq!(zero["closed_form"].as_f64(), Some(0.0));
    assert_eq!(zero["quadrature"].as_f64(), Some(0.0));

    let m2 = json(&recest(&["oracle", "--quantity", "m2", "--u", "0"]));
    assert_eq!(m2["closed_form"].as_f64(), Some(0.5));
    assert!(m2["abs_diff"].as_f64().unwrap() < 1e-6);

    let neg = recest(&["oracle", "--quantity", "b", "--u", "-2.5", "--theta", "3"]);
    assert_eq!(code(&neg), 0);
    assert!((json(&neg)["closed_form"].as_f64().unwrap() - 5.0 / 10.25).abs() < 1e-15);
}

#[test]
fn oracle_tolerance_breach_is_numeric_failure() {
    let out = recest(&["oracle", "--quantity", "b", "--u", "1", "--tol", "1e-300"]);
    assert_eq!(code(&out), 3);
    assert!(json(&out)["abs_diff"].as_f64().unwrap() > 0.0);
}

#[test]
fn ktrace_columns_are_consistent() {
    let out = recest(&["ktrace", "--t-max", "1000", "--seed", "4"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(
        header,
        [
            "t",
            "V",
            "dV",
            "drift",
            "moment",
            "K",
            "premise_partial_sum"
        ]
    );
    assert_eq!(rows.len(), 1000);
    let mut sum = 0.0;
    for row in &rows {
        let f: Vec<f64> = row[1..].iter().map(|s| s.parse().unwrap()).collect();
        let (v, dv, drift, moment, k, partial) = (f[0], f[1], f[2], f[3], f[4], f[5]);
        assert_eq!(k, dv + drift + moment);
        sum += k.max(0.0) / (1.0 + v);
        assert!((partial - sum).abs() <= 1e-12 * sum.max(1.0));
    }
}

#[test]
fn ktrace_additive_has_script_n() {
    let out = recest(&["ktrace", "--model", "ar1", "--t-max", "500"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header.last().unwrap(), "scriptN");
    assert!(rows
        .iter()
        .all(|r| r[7].parse::<f64>().unwrap().is_finite()));
    let info = recest(&[
        "ktrace",
        "--model",
        "ar1",
        "--t-max",
        "500",
        "--a-choice",
        "information",
    ]);
    assert_eq!(code(&info), 0);
}

#[test]
fn zero_estimating_function_leaves_only_dv() {
    let scheme = iid_scheme(
        |_: &ParamVec64, _: f64| ParamVec64::scalar(0.0),
        |_: &ParamVec64| Matrix64::scalar(1.0),
        1,
    )
    .with_sampler(|theta, rng| theta.first() + rng.standard_normal())
    .with_drift(|_, _| ParamVec64::scalar(0.0))
    .with_second_moment(|_, _| Matrix64::scalar(0.0));
    let traj = simulate(
        &scheme,
        &ParamVec64::scalar(1.0),
        &ParamVec64::scalar(0.0),
        200,
        1,
    )
    .unwrap();
    let a: Vec<f64> = (0..=200).map(|t| t as f64).collect();
    let (kt, n) = ktrace_rows(&scheme, None, &traj, &Matrix64::identity(1), &a, 0.4).unwrap();
    assert!(n.is_none());
    let text = String::from_utf8(ktrace_csv(&kt, None)).unwrap();
    let (_, rows) = csv_rows(&text);
    for row in rows {
        assert_eq!(row[5], row[2]);
    }
}

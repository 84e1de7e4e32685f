use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logcoint::report::{ReportPayload, RunReport, REPORT_SCHEMA};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn logcoint(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logcoint"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("spawn logcoint")
}

fn run_ok(args: &[&str]) -> (TempDir, RunReport) {
    let dir = TempDir::new().unwrap();
    let out = logcoint(args, dir.path());
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    check_schema(&text);
    (dir, RunReport::from_json(&text).unwrap())
}

fn check_schema(text: &str) {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let instance: Value = serde_json::from_str(text).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&instance)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let dir = TempDir::new().unwrap();
    let out = logcoint(args, dir.path());
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn lines(path: PathBuf) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn select_ranks_peer_ladder() {
    let peers = fixture("peers.csv");
    let (dir, report) = run_ok(&["select", "--prices", &peers]);
    assert_eq!(report.timestamp, 1_700_000_000);
    let ReportPayload::Selection(sel) = report.result else {
        panic!("expected selection payload")
    };
    let ranking: Vec<&str> = sel.ranking.iter().map(|i| i.as_str()).collect();
    assert_eq!(
        ranking,
        ["F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "F9"]
    );
    assert_eq!(sel.window.n_dates, 252);
    for f in &sel.funds {
        let csv = lines(dir.path().join(&f.residual_file));
        assert_eq!(csv[0], "date,residual");
        assert_eq!(csv.len(), 253);
    }
}

#[test]
fn replicate_recovers_disclosed_weights() {
    let (dir, report) = run_ok(&[
        "replicate",
        "--fund",
        &fixture("fund.csv"),
        "--holdings",
        &fixture("holdings.csv"),
        "--prices",
        &fixture("holdings_prices.csv"),
    ]);
    let ReportPayload::Plan(plan) = report.result else {
        panic!("expected plan payload")
    };
    let disclosed = plan.disclosed_weights.clone().unwrap();
    for (w, d) in plan.weights.iter().zip(&disclosed) {
        assert!((w.beta - d).abs() < 0.02, "{}: {} vs {}", w.id, w.beta, d);
    }
    assert!(plan.r_squared > 0.99);
    let csv = lines(dir.path().join("replication.csv"));
    assert_eq!(csv[0], "date,actual,replicated");
    assert_eq!(csv.len(), 301);
    assert!(dir.path().join("residual_FUND01.csv").exists());
}

#[test]
fn construct_reproduces_growth_book() {
    let (dir, report) = run_ok(&[
        "construct",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--holdings",
        &fixture("holdings.csv"),
        "--rate",
        "0.08",
    ]);
    let ReportPayload::Plan(plan) = report.result else {
        panic!("expected plan payload")
    };
    let expected = [
        -3.56, -2.31, -1.85, -1.71, -0.03, 0.48, 0.52, 3.71, 3.77, 8.4,
    ];
    for (w, e) in plan.weights.iter().zip(expected) {
        assert!((w.beta - e / 100.0).abs() < 1e-9, "{}: {}", w.id, w.beta);
    }
    assert!((plan.sum_positive - 0.1688).abs() < 1e-9);
    assert!((plan.cash_fraction - 0.8312).abs() < 1e-9);
    let tracking = plan.tracking.unwrap();
    assert!((tracking.realized_annual_rate - 0.08).abs() < 1e-9);
    let nav = lines(dir.path().join("nav.csv"));
    assert_eq!(nav[0], "date,nav");
    assert_eq!(nav[1], "2019-03-01,1");
}

#[test]
fn sweep_writes_one_nav_per_rate() {
    let (dir, report) = run_ok(&[
        "sweep",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--rate",
        "0.04,0.08,0.12",
    ]);
    let ReportPayload::Sweep(sweep) = report.result else {
        panic!("expected sweep payload")
    };
    let s: Vec<f64> = sweep.plans.iter().map(|p| p.sum_positive).collect();
    assert!(s.windows(2).all(|w| w[0] < w[1]));
    assert!((s[1] - 2.0 * s[0]).abs() < 1e-9);
    for r in ["0.04", "0.08", "0.12"] {
        assert!(dir.path().join(format!("nav_{r}.csv")).exists());
    }
}

#[test]
fn sweep_rejects_unsorted_rates() {
    let (code, err) = exit_code(&[
        "sweep",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--rate",
        "0.08,0.04",
    ]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn simulate_defaults() {
    let (dir, report) = run_ok(&["simulate"]);
    let ReportPayload::Simulation(sim) = report.result else {
        panic!("expected simulation payload")
    };
    assert!(sim.max_abs_deviation > 1e-4);
    assert!(sim.max_rebalanced_error <= 1e-12);
    let csv = lines(dir.path().join("sim.csv"));
    assert_eq!(csv[0], "t,naive,actual,rebalanced");
    assert_eq!(csv.len(), 253);
}

#[test]
fn backtest_growth_book() {
    let (dir, report) = run_ok(&[
        "backtest",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--rate",
        "0.08",
        "--capital",
        "100",
    ]);
    let ReportPayload::Backtest(bt) = report.result else {
        panic!("expected backtest payload")
    };
    assert!((bt.synthetic_tracking.realized_annual_rate - 0.08).abs() < 1e-9);
    assert!((bt.buy_and_hold_tracking.realized_annual_rate - 0.08).abs() < 0.01);
    let nav = lines(dir.path().join("nav_buy_and_hold.csv"));
    assert_eq!(nav[1], "2019-03-01,100");
}

#[test]
fn backtest_without_margin_fails_precondition() {
    // The replicated book is slightly over fully invested.
    let (code, err) = exit_code(&[
        "backtest",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--holdings",
        &fixture("holdings.csv"),
        "--fund",
        &fixture("fund.csv"),
    ]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("margin"), "{err}");
}

#[test]
fn backtest_replication() {
    let (_dir, report) = run_ok(&[
        "backtest",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--holdings",
        &fixture("holdings.csv"),
        "--fund",
        &fixture("fund.csv"),
        "--allow-margin",
    ]);
    let ReportPayload::Backtest(bt) = report.result else {
        panic!("expected backtest payload")
    };
    assert!(bt.synthetic_tracking.correlation > 0.99);
    assert!(bt.synthetic_tracking.max_abs_error < 0.05);
}

#[test]
fn validate_flags_regime_change() {
    let (dir, report) = run_ok(&[
        "validate",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--fund",
        &fixture("regime_fund.csv"),
    ]);
    let ReportPayload::Validation(v) = report.result else {
        panic!("expected validation payload")
    };
    assert_eq!((v.train_rows, v.test_rows), (270, 30));
    assert!(v.out_of_sample.rel_spread > 5.0 * v.in_sample.rel_spread);
    let csv = lines(dir.path().join("residual_holdout.csv"));
    assert_eq!(csv[0], "date,residual,holdout");
    assert_eq!(csv.len(), 301);
}

#[test]
fn date_window_is_applied() {
    let (_dir, report) = run_ok(&[
        "select",
        "--prices",
        &fixture("peers.csv"),
        "--from",
        "2019-04-01",
        "--to",
        "2019-12-31",
    ]);
    let ReportPayload::Selection(sel) = report.result else {
        panic!("expected selection payload")
    };
    assert_eq!(sel.window.first_date, "2019-04-01");
    assert!(sel.window.last_date.as_str() <= "2019-12-31");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(exit_code(&["select"]).0, 2);
    assert_eq!(exit_code(&["frobnicate"]).0, 2);
    assert_eq!(
        exit_code(&["select", "--prices", "x", "--from", "2019-13-01"]).0,
        2
    );
}

#[test]
fn input_errors_exit_3() {
    let (code, err) = exit_code(&["select", "--prices", "/nonexistent/prices.csv"]);
    assert_eq!(code, 3);
    assert!(err.contains("/nonexistent/prices.csv"), "{err}");

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "code,date,price\nA,2020-01-01,1.0\nA,2020-01-02,-3\n").unwrap();
    let (code, err) = exit_code(&["select", "--prices", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn missing_instrument_exits_4() {
    let dir = TempDir::new().unwrap();
    let holdings = dir.path().join("h.csv");
    std::fs::write(
        &holdings,
        "fund,as_of,holding,weight\nFUND01,2020-04-23,STK01,\nFUND01,2020-04-23,NOPE,\n",
    )
    .unwrap();
    let (code, err) = exit_code(&[
        "replicate",
        "--fund",
        &fixture("fund.csv"),
        "--holdings",
        holdings.to_str().unwrap(),
        "--prices",
        &fixture("holdings_prices.csv"),
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("NOPE"), "{err}");
}

#[test]
fn empty_window_exits_4() {
    let (code, err) = exit_code(&[
        "select",
        "--prices",
        &fixture("peers.csv"),
        "--from",
        "2030-01-01",
    ]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn short_window_exits_4() {
    let (code, err) = exit_code(&[
        "construct",
        "--prices",
        &fixture("holdings_prices.csv"),
        "--rate",
        "0.08",
        "--to",
        "2019-03-20",
    ]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn collinear_prices_exit_5() {
    let dir = TempDir::new().unwrap();
    let prices = dir.path().join("p.csv");
    let mut text = String::from("code,date,price\n");
    let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    for code in ["A", "B"] {
        for i in 0..40u64 {
            let p = 10.0 * (1.0 + 0.01 * ((i * 7 % 11) as f64));
            let p = if code == "B" { p * 3.0 } else { p };
            let d = start + chrono::Days::new(i);
            text.push_str(&format!("{code},{d},{p}\n"));
        }
    }
    std::fs::write(&prices, text).unwrap();
    let (code, err) = exit_code(&[
        "construct",
        "--prices",
        prices.to_str().unwrap(),
        "--rate",
        "0.05",
    ]);
    assert_eq!(code, 5, "{err}");
}

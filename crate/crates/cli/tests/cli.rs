use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn minsky(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minsky"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(out: Output) -> String {
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_classify_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(minsky(d, &[
        "generate", "population", "--n", "20000", "--mu", "-0.76", "--beta", "1.3", "--rate", "6", "--seed", "4",
        "--out", "pop",
    ]));
    let firms = fs::read_to_string(d.join("pop/firms.csv")).unwrap();
    assert!(firms.starts_with("firm_id,year,ebit,bank_loans,ebtda,financial_costs,sales,purchases,sector\n"));
    assert_eq!(firms.lines().count(), 20_001);

    let stdout = ok(minsky(d, &["classify", "--firms", "pop/firms.csv", "--out", "cls"]));
    assert!(stdout.contains("2006: 20000 firms"), "{stdout}");
    let statuses = fs::read_to_string(d.join("cls/statuses.csv")).unwrap();
    assert!(statuses.starts_with("firm_id,year,status\n"));

    ok(minsky(d, &["fit", "--firms", "pop/firms.csv", "--i-min", "2.42", "--i-max", "49", "--out", "fit"]));
    let params = fs::read_to_string(d.join("fit/params.csv")).unwrap();
    let mut lines = params.lines();
    assert_eq!(lines.next(), Some("year,mu,i_min,beta,i_max,r2_mu,r2_beta,n_excluded"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 2006.0);
    assert!((row[1] / -0.76 - 1.0).abs() < 0.03, "mu {}", row[1]);
    assert_eq!((row[2], row[4]), (2.42, 49.0));
    assert!((row[3] / 1.3 - 1.0).abs() < 0.03, "beta {}", row[3]);
}

#[test]
fn simulate_writes_trajectory_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let params = r#"{"mu": -0.76, "beta": 1.30, "alpha1": -1.346, "alpha2": 0.765, "i_min": 2.42, "i_max": 49.0}"#;
    fs::write(d.join("params.json"), params).unwrap();
    let stdout = ok(minsky(d, &["simulate", "--config", "params.json", "--regime", "loans", "--rate", "5", "--steps", "12"]));
    assert!(stdout.contains("Divergent"), "{stdout}");
    let csv = fs::read_to_string(d.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 14);
    assert!(csv.starts_with("t,regime,rate,loans_fraction,ponzi_density,n_tot,n_loans,n_ponzi,clamped\n"));

    ok(minsky(d, &[
        "simulate", "--config", "params.json", "--alpha2", "0.7", "--regime", "crisis", "--rate", "10", "--format",
        "json",
    ]));
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 13);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("simulation.json")).unwrap()).unwrap();
    assert!((summary["product"].as_f64().unwrap() - 0.91).abs() < 1e-12);

    let missing = minsky(d, &["simulate", "--regime", "loans", "--rate", "5"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn network_generation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(minsky(d, &["network", "gen", "--n", "500", "--mean-degree", "4", "--exponent", "2.5", "--seed", "3", "--out", "a"]));
    ok(minsky(d, &["network", "gen", "--n", "500", "--mean-degree", "4", "--exponent", "2.5", "--seed", "3", "--out", "b"]));
    let a = fs::read(d.join("a/edges.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b/edges.csv")).unwrap());
    assert!(a.starts_with(b"buyer_id,supplier_id,weight\n"));

    assert_eq!(code(&minsky(d, &["network", "gen", "--n", "500"])), 2);
    assert_eq!(code(&minsky(d, &["network", "gen", "--n", "500", "--exponent", "0.9", "--seed", "1"])), 2);
}

#[test]
fn contagion_runs_and_flags_supercritical_density() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(minsky(d, &["network", "gen", "--n", "500", "--mean-degree", "4", "--exponent", "2.5", "--seed", "8"]));

    let stdout = ok(minsky(d, &[
        "contagion", "run", "--edges", "edges.csv", "--mode", "failure", "--ponzi-density", "0.1", "--seed", "2",
        "--rho-c", "0.18", "--gamma", "1", "--scale", "1", "--out", "fail",
    ]));
    assert!(stdout.contains("closed-form expected failures"), "{stdout}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("fail/cascade_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ponzi"], 50);
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 1);
    let rows = fs::read_to_string(d.join("fail/cascade.csv")).unwrap();
    assert!(rows.starts_with("round,new_failures,cumulative_failures\n0,1,1\n"), "{rows}");

    let over = minsky(d, &[
        "contagion", "run", "--edges", "edges.csv", "--mode", "failure", "--ponzi-density", "0.2", "--seed", "2",
        "--rho-c", "0.18", "--gamma", "1", "--scale", "1",
    ]);
    assert_eq!(code(&over), 3, "{}", String::from_utf8_lossy(&over.stderr));
    assert!(String::from_utf8_lossy(&over.stderr).contains("supercritical"));

    let edges = "buyer_id,supplier_id,weight\np1,h,1\np2,h,1\ns,h,1\nh,h2,1\n";
    fs::write(d.join("small.csv"), edges).unwrap();
    let firms = "firm_id,year,ebit,bank_loans,ebtda,financial_costs,sales,purchases,sector\n\
                 p1,2007,1,10,1,10,,,Manufacturing\n\
                 p2,2007,1,10,1,10,,,Manufacturing\n\
                 s,2007,1,10,20,10,,,Manufacturing\n\
                 h,2007,20,10,20,10,,,Manufacturing\n\
                 h2,2007,20,10,20,10,,,Manufacturing\n";
    fs::write(d.join("firms.csv"), firms).unwrap();
    ok(minsky(d, &[
        "contagion", "run", "--edges", "small.csv", "--mode", "bootstrap", "--firms", "firms.csv", "--year", "2007",
        "--threshold", "0.5", "--out", "boot",
    ]));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("boot/cascade_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"], serde_json::json!(["p1", "p2"]));
    assert_eq!(summary["affected"], serde_json::json!(["p1", "p2", "h", "h2"]));
    assert_eq!(summary["rounds"], 2);

    let bad = minsky(d, &["contagion", "run", "--edges", "small.csv", "--mode", "bootstrap", "--firms", "firms.csv",
        "--year", "2007", "--threshold", "1.5"]);
    assert_eq!(code(&bad), 2);
}

fn growth_fixture(dir: &Path) {
    // four suppliers, each sold to two buyers; invoices cover the full sales
    let mut firms = String::from("firm_id,year,ebit,bank_loans,ebtda,financial_costs,sales,purchases,sector\n");
    let mut edges = String::from("buyer_id,supplier_id,weight\n");
    let growth = [(1.0, 2.0, 1.4), (1.0, 1.0, 1.05), (0.5, 1.0, 0.9), (2.0, 2.0, 1.9)];
    for (k, (g1, g2, realized)) in growth.iter().enumerate() {
        let s = format!("s{k}");
        let ebit_next = if k == 3 { 5.0 } else { 20.0 };
        firms += &format!("{s},2007,20,10,20,10,100,50,Manufacturing\n");
        firms += &format!("{s},2008,{ebit_next},10,20,10,{},50,Manufacturing\n", 100.0 * realized);
        for (j, g) in [g1, g2].iter().enumerate() {
            let b = format!("b{k}{j}");
            let ponzi = j == 0 && k % 2 == 0;
            let (ebit, ebtda) = if ponzi { (1, 1) } else { (20, 20) };
            firms += &format!("{b},2007,{ebit},10,{ebtda},10,80,40,Manufacturing\n");
            firms += &format!("{b},2008,{ebit},10,{ebtda},10,80,{},Manufacturing\n", 40.0 * *g);
            edges += &format!("{b},{s},50\n");
        }
    }
    fs::write(dir.join("firms.csv"), firms).unwrap();
    fs::write(dir.join("edges.csv"), edges).unwrap();
}

#[test]
fn growth_analysis_outputs_pairs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    growth_fixture(d);
    let stdout = ok(minsky(d, &["analyze", "growth", "--firms", "firms.csv", "--edges", "edges.csv", "--year", "2007"]));
    assert!(stdout.contains("4 of 4 suppliers selected, 4 growth pairs"), "{stdout}");
    let csv = fs::read_to_string(d.join("growth.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("supplier_id,estimated,realized,status_from,status_to,ponzi_buyer_ratio"));
    assert_eq!(lines.next(), Some("s0,1.5,1.4,hedge,hedge,0.5"));
    assert_eq!(lines.last(), Some("s3,2.0,1.9,hedge,speculative,0.0"));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("growth_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pairs"], 4);
    assert!(summary["fits"][0]["fit"]["r_squared"].as_f64().unwrap() > 0.9);
    assert!(summary["fits"][2]["fit"].is_null());
    assert_eq!(summary["quadrants"]["first"], 2);
    assert_eq!(summary["quadrants"]["third"], 1);
    assert_eq!(summary["quadrants"]["on_axis"], 1);
}

#[test]
fn scenario_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{
        "seed": 11,
        "initial_state": {"rate": 5.0, "n_tot": 603799, "n_hedge": 322592},
        "periods": [
            {"label": "2006", "regime": "loans",
             "params": {"fixed": {"mu": -0.76, "beta": 1.30, "alpha1": -1.346, "alpha2": 0.765, "i_min": 2.42, "i_max": 49.0}}},
            {"label": "2007", "regime": "crisis", "steps": 6,
             "params": {"fit_from_synthetic": {"n": 20000, "rate": 6.0,
                 "generator": {"mu": -0.76, "beta": 1.28, "alpha1": -1.338, "alpha2": 0.775, "i_min": 2.42, "i_max": 49.0}}}}
        ]
    }"#;
    fs::write(d.join("scenario.json"), config).unwrap();
    let stdout = ok(minsky(d, &["scenario", "run", "--config", "scenario.json", "--out", "a"]));
    assert!(stdout.contains("2006 (loans): alpha1*mu 1.0230 Divergent"), "{stdout}");
    ok(minsky(d, &["scenario", "run", "--config", "scenario.json", "--out", "b"]));
    for name in ["scenario_report.json", "trajectory.csv"] {
        assert_eq!(fs::read(d.join("a").join(name)).unwrap(), fs::read(d.join("b").join(name)).unwrap(), "{name}");
    }
    assert_eq!(fs::read_to_string(d.join("a/trajectory.csv")).unwrap().lines().count(), 1 + 1 + 12 + 6);

    ok(minsky(d, &["scenario", "run", "--config", "scenario.json", "--seed", "12", "--out", "c"]));
    assert_ne!(
        fs::read(d.join("a/scenario_report.json")).unwrap(),
        fs::read(d.join("c/scenario_report.json")).unwrap()
    );

    fs::write(d.join("empty.json"), r#"{"seed": 1, "initial_state": {"rate": 5, "n_tot": 1, "n_hedge": 0}, "periods": []}"#)
        .unwrap();
    assert_eq!(code(&minsky(d, &["scenario", "run", "--config", "empty.json"])), 2);
    assert_eq!(code(&minsky(d, &["scenario", "run"])), 2);
}

#[test]
fn input_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "id,year\nx,2007\n").unwrap();
    assert_eq!(code(&minsky(d, &["classify", "--firms", "bad.csv"])), 2);
    assert_eq!(code(&minsky(d, &["classify", "--firms", "missing.csv"])), 1);
    assert_eq!(
        code(&minsky(d, &["generate", "population", "--n", "50", "--mu", "-0.8", "--beta", "1.3", "--rate", "5", "--seed", "1"])),
        2
    );
    assert_eq!(code(&minsky(d, &["simulate", "--regime", "sideways", "--rate", "5"])), 2);
}

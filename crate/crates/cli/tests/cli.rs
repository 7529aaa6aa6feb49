//! Integration tests driving the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn boostsw(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boostsw"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn get_value(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .map(str::to_owned)
}

#[test]
fn design_defaults_are_nominal_and_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = boostsw(&["design"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(get_value(&text, "feasible").as_deref(), Some("true"));
    // defaults reproduce the nominal parameter set
    assert_eq!(get_value(&text, "lambda").as_deref(), Some("4000"));
    assert_eq!(get_value(&text, "gamma").as_deref(), Some("2.5"));
    assert_eq!(get_value(&text, "r").as_deref(), Some("1"));
    assert_eq!(get_value(&text, "fs_target").as_deref(), Some("200000"));
    let slack: f64 = get_value(&text, "slack_min_vertex").unwrap().parse().unwrap();
    assert!(slack < 0.0);
}

#[test]
fn design_infeasible_alpha_exits_2_and_reports_ceiling() {
    let dir = tempfile::tempdir().unwrap();
    let out = boostsw(&["design", "--set", "alpha=2000"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert_eq!(get_value(&text, "feasible").as_deref(), Some("false"));
    let ab: f64 = get_value(&text, "alpha_bar").unwrap().parse().unwrap();
    assert!((ab - 1000.0).abs() < 50.0, "reported ceiling {ab}");
}

#[test]
fn design_missing_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = boostsw(&["design", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn design_reads_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "alpha = 60\nlambda = 5000\n").unwrap();
    let out = boostsw(
        &["design", "--config", "run.toml", "--set", "lambda=6000"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(get_value(&text, "alpha").as_deref(), Some("60"));
    // command-line override wins over the file
    assert_eq!(get_value(&text, "lambda").as_deref(), Some("6000"));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--scenario",
        "s2",
        "--seed",
        "7",
        "--set",
        "t_end=0.02",
        "--set",
        "log_decimation=100",
    ];
    let mut a = args.to_vec();
    a.extend(["--out", "run_a"]);
    let mut b = args.to_vec();
    b.extend(["--out", "run_b"]);
    assert!(boostsw(&a, dir.path()).status.success());
    assert!(boostsw(&b, dir.path()).status.success());
    for file in ["s2_trace.csv", "s2_metrics.txt"] {
        let fa = std::fs::read(dir.path().join("run_a").join(file)).unwrap();
        let fb = std::fs::read(dir.path().join("run_b").join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical runs");
    }
}

#[test]
fn s1_metrics_show_the_unreachable_plateau_and_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = boostsw(
        &[
            "simulate",
            "--scenario",
            "s1",
            "--out",
            "out",
            "--set",
            "log_decimation=100",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(dir.path().join("out/s1_metrics.txt")).unwrap();

    // the frozen-target segment parks at the input voltage
    let block: Vec<&str> = metrics
        .split("[window 0.16:0.2]\n")
        .nth(1)
        .expect("window block present")
        .lines()
        .take_while(|l| !l.is_empty() && !l.starts_with('['))
        .collect();
    let mean_vo: f64 = block
        .iter()
        .find_map(|l| l.strip_prefix("mean_vo = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((mean_vo - 300.0).abs() < 6.0, "mean vo {mean_vo}");

    // report over the written trace reproduces the stored block exactly
    let report = boostsw(
        &[
            "report",
            "out/s1_trace.csv",
            "--window",
            "0.16:0.2",
            "--set",
            "log_decimation=100",
        ],
        dir.path(),
    );
    assert!(report.status.success());
    let report_lines: Vec<String> = stdout(&report).lines().map(str::to_owned).collect();
    assert_eq!(report_lines, block, "report does not match the metrics file");
}

#[test]
fn s3_accepts_external_irradiance_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t_seconds,irradiance_wm2\n");
    for k in 0..=12 {
        csv.push_str(&format!("{},{}\n", k as f64 * 0.05, 1000.0 - 10.0 * k as f64));
    }
    std::fs::write(dir.path().join("irr.csv"), csv).unwrap();
    let out = boostsw(
        &[
            "simulate",
            "--scenario",
            "s3",
            "--irradiance",
            "irr.csv",
            "--out",
            "out",
            "--set",
            "t_end=0.02",
            "--set",
            "log_decimation=100",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/s3_trace.csv").exists());

    // trace not covering the scenario duration is rejected up front
    std::fs::write(dir.path().join("short.csv"), "0,1000\n0.1,900\n").unwrap();
    let out = boostsw(
        &["simulate", "--scenario", "s3", "--irradiance", "short.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_rejects_malformed_input_and_empty_windows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "nope\n1,2\n").unwrap();
    let out = boostsw(&["report", "bad.csv", "--window", "0:1"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let header = "t,iL,vo,sigma,p1_true,p2_true,p1_hat,p2_hat,iL_star,vo_star,s_value,h_value";
    std::fs::write(
        dir.path().join("tiny.csv"),
        format!("{header}\n0,0,450,0,350,0,350,0,57,450,0,1\n"),
    )
    .unwrap();
    let out = boostsw(&["report", "tiny.csv", "--window", "5:6"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = boostsw(&["report", "tiny.csv", "--window", "eh"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_scenario_and_bad_overrides_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = boostsw(&["simulate", "--scenario", "s9"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = boostsw(&["design", "--set", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = boostsw(&["design", "--set", "no_such_key=1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

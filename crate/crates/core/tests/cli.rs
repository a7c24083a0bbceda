//! The `nomavid` binary: subcommands, output files and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn nomavid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nomavid")).args(args).output().expect("binary runs")
}

fn scenario_file() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/data/default_scenario.toml").to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_accepts_the_bundled_scenario() {
    let o = nomavid(&["validate", "--config", &scenario_file()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("ok (6 UEs, 200 trials, 5 SNR points)"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "trials = 10\nno_such_key = 1\n").unwrap();
    assert_eq!(nomavid(&["validate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, "power_budget_w = -1.0\n").unwrap();
    assert_eq!(nomavid(&["validate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn infeasible_solve_exits_with_three() {
    let o = nomavid(&["solve", "--gains", "0.001,0.002", "--streams", "Mobile,Football", "--snr", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn solve_prints_every_scheme_and_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = nomavid(&[
        "solve", "--gains", "0.3,1.5", "--streams", "Foreman,Football", "--snr", "20", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for name in ["polyblock", "greedy", "noma-mt", "oma"] {
        assert!(out.contains(name), "{name} missing from\n{out}");
    }
    let rows = std::fs::read_to_string(&trace).unwrap();
    assert!(rows.starts_with("iteration,vertices,upper_bound,incumbent,relative_gap"));
    assert!(rows.lines().count() > 1);
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--trials", "2", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    nomavid(&args)
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&a, &[]).status.success());
    assert!(simulate(&b, &[]).status.success());
    for f in ["records.csv", "fig4_avg_psnr.csv", "table1_power_coeff.csv", "table2_grouping.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    // A different seed changes the draws.
    let c = dir.path().join("c");
    assert!(simulate(&c, &["--seed", "7"]).status.success());
    assert_ne!(std::fs::read(a.join("records.csv")).unwrap(), std::fs::read(c.join("records.csv")).unwrap());
}

#[test]
fn sweep_covers_each_snr_for_each_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let o = nomavid(&["sweep-snr", "--trials", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fig4 = std::fs::read_to_string(dir.path().join("fig4_avg_psnr.csv")).unwrap();
    let rows: Vec<&str> = fig4.lines().skip(1).collect();
    for scheme in ["polyblock", "greedy", "noma-mt", "oma"] {
        assert_eq!(rows.iter().filter(|r| r.split(',').nth(2) == Some(scheme)).count(), 6, "{scheme}\n{fig4}");
    }
}

#[test]
fn grouping_compare_reports_each_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let o = nomavid(&["grouping-compare", "--trials", "1", "--solver", "greedy", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for s in ["WLBH", "WRBR", "WHBL"] {
        assert!(out.contains(s), "{s} missing from\n{out}");
    }
}

#[test]
fn fit_rd_prints_a_fixture_row() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("points.csv");
    // Samples of 38000/(mse + 2) + 20000 bps.
    let mut text = String::from("rate_bps,mse\n");
    for mse in [5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 120.0, 160.0] {
        text.push_str(&format!("{},{mse}\n", 38000.0 / (mse + 2.0) + 20000.0));
    }
    std::fs::write(&points, text).unwrap();
    let o = nomavid(&[
        "fit-rd", "--points", points.to_str().unwrap(), "--stream", "Probe", "--q-min", "26", "--q-max", "38",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("Probe")).expect("fitted row");
    assert!(out.lines().next().unwrap().contains("theta"));
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1], "Low");
    let num = |i: usize| cols[i].parse::<f64>().unwrap();
    // alpha, beta, theta come back from exact samples.
    assert!((num(3) - 2.0).abs() < 1e-3, "{row}");
    assert!((num(4) - 20000.0).abs() < 1.0, "{row}");
    assert!((num(5) - 38000.0).abs() < 10.0, "{row}");
}

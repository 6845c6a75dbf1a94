use std::path::Path;
use std::process::{Command, Output};

use ris_mimo::harness::{read_records, CSV_HEADER, TRIAL_LOG_HEADER};

fn risbf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risbf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "n_tx = 4x4\nn_rx = 4x4\nris = 8x8\n";

#[test]
fn sweep_writes_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = risbf(&["sweep", "--trials", "10", "--ptx", "30", "--seed", "7", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("30,proposed,"));
    assert!(lines[2].starts_with("30,random_ris,"));
    assert!(lines[3].starts_with("30,exhaustive_oracle,"));
    assert!(lines[1].ends_with(",10,7"));
}

#[test]
fn unknown_band_names_the_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = risbf(&["sweep", "--band", "sub6", "--trials", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mmwave28") && err.contains("thz142"), "{err}");
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = risbf(&["sweep", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    std::fs::write(dir.path().join("bad.cfg"), "trials = many\n").unwrap();
    let out = risbf(&["sweep", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));

    let out = risbf(&["sweep", "--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = risbf(&["sweep", "--trials", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = risbf(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["sweep", "validate", "oracle"] {
        assert!(text.contains(sub), "{text}");
    }
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), format!("{SMALL}trials = 3\nseed = 1\nptx_dbm = 20, 30\n")).unwrap();
    let out = risbf(&["sweep", "--config", "s.cfg", "--seed", "9", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_records(&dir.path().join("r.csv")).unwrap();
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.seed == 9 && r.trials == 3));
}

#[test]
fn trial_log_reproduces_the_means() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), format!("{SMALL}trials = 7\nptx_dbm = 25, 35\n")).unwrap();
    let out = risbf(
        &["sweep", "--config", "s.cfg", "--out", "r.csv", "--trial-log", "t.csv", "--plot-script", "plot.py"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some(TRIAL_LOG_HEADER));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 7 * 2 * 3);
    for r in read_records(&dir.path().join("r.csv")).unwrap() {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|x| x[1].parse::<f64>().unwrap() == r.ptx_dbm && x[2] == r.method.key())
            .map(|x| x[3].parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 7);
        let mean = vals.iter().sum::<f64>() / 7.0;
        assert!((mean - r.mean_capacity).abs() <= 1e-9 + 5e-6 * mean.abs(), "{mean} vs {}", r.mean_capacity);
    }
    let script = std::fs::read_to_string(dir.path().join("plot.py")).unwrap();
    assert!(script.contains("r.csv") && script.contains("matplotlib"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), format!("{SMALL}trials = 12\n")).unwrap();
    for (threads, name) in [("1", "a.csv"), ("8", "b.csv"), ("8", "c.csv")] {
        let out = risbf(&["sweep", "--config", "s.cfg", "--threads", threads, "--out", name], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn validate_and_oracle_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = risbf(&["validate", "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS") && !text.contains("FAIL"));

    std::fs::write(dir.path().join("s.cfg"), SMALL).unwrap();
    let out = risbf(&["oracle", "--config", "s.cfg", "--ptx", "30", "--trial", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("trial 2 at 30 dBm") && text.contains("shortfall"), "{text}");
}

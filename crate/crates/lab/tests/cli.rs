use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bai_lab::config::ConfigFile;

const B5: &str = "0.3,0.21,0.2,0.19,0.18";

fn bai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bai"))
        .args(args)
        .env_remove("BAI_WORKERS")
        .output()
        .expect("spawn bai")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn times_prints_table() {
    let out = bai(&["times", "--model", "bernoulli", "--means", B5]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("T*       326.6"), "{text}");
    assert!(
        text.lines()
            .any(|l| l.starts_with("0.1 ") && l.contains("574.2")),
        "{text}"
    );
}

#[test]
fn times_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t");
    let out = bai(&[
        "times",
        "--model",
        "gaussian",
        "--means",
        "1,0.85,0.8,0.7",
        "--out",
        path(&target),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(target.join("times.csv")).unwrap();
    let t_lower: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("t_lower,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((t_lower - 450.52).abs() < 0.01);
}

#[test]
fn run_record_count_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("r");
    let out = bai(&[
        "run",
        "--model",
        "bernoulli",
        "--means",
        B5,
        "--policies",
        "bcte,rr",
        "--deltas",
        "0.2,0.1",
        "--runs",
        "10",
        "--seed",
        "3",
        "--out",
        path(&target),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = fs::read_to_string(target.join("runs.ndjson")).unwrap();
    assert_eq!(records.lines().count(), 10 * 2 * 2);
    let agg = fs::read_to_string(target.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 4);
    assert!(agg
        .lines()
        .next()
        .unwrap()
        .ends_with("welch_vs_bcte,welch_vs_rr"));
    let leftovers: Vec<_> = fs::read_dir(&target)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".partial"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn effective_config_replays_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let out = bai(&[
        "run",
        "--model",
        "poisson",
        "--means",
        "2,1.5,1",
        "--policies",
        "t3c:0.4,tasd",
        "--runs",
        "5",
        "--seed",
        "11",
        "--out",
        path(&first),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cfg_path = first.join("effective_config.toml");
    let cfg = ConfigFile::load(&cfg_path).unwrap();
    assert_eq!(cfg.experiment.master_seed, Some(11));

    let second = dir.path().join("b");
    let out = bai(&[
        "run",
        "--config",
        path(&cfg_path),
        "--out",
        path(&second),
        "--workers",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        fs::read(first.join("runs.ndjson")).unwrap(),
        fs::read(second.join("runs.ndjson")).unwrap()
    );
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    fs::write(
        &cfg_path,
        "[instance]\nmodel = \"bernoulli\"\nmeans = [0.6, 0.4]\n\n[experiment]\nn_runs = 4\ndeltas = [0.1]\n",
    )
    .unwrap();
    let target = dir.path().join("o");
    let out = bai(&[
        "run",
        "--config",
        path(&cfg_path),
        "--runs",
        "3",
        "--out",
        path(&target),
    ]);
    assert!(out.status.success());
    let records = fs::read_to_string(target.join("runs.ndjson")).unwrap();
    assert_eq!(records.lines().count(), 3);
}

#[test]
fn exit_codes() {
    // invalid configuration
    let out = bai(&["times", "--model", "bernoulli", "--means", "0.3,0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bai(&["times", "--model", "bernoulli", "--means", "0.3,1.2"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("never");
    let out = bai(&[
        "run",
        "--model",
        "bernoulli",
        "--means",
        "0.6,0.4",
        "--policies",
        "nope",
        "--out",
        path(&target),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    assert!(!target.exists());

    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[instance]\nmodel = \"bernoulli\"\nmeans = [0.6, 0.4]\nextra = 1\n",
    )
    .unwrap();
    let out = bai(&["times", "--config", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extra"));
}

#[test]
fn sweep_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("s");
    let out = bai(&[
        "sweep",
        "--family",
        "mu2",
        "--models",
        "bernoulli,poisson",
        "--kmin",
        "3",
        "--kmax",
        "6",
        "--out",
        path(&target),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(target.join("ratio_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("model,K,ratio_lower,ratio_half"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let lower: f64 = cols[2].parse().unwrap();
        assert!(lower >= 1.0 - 1e-9, "{line}");
    }
}

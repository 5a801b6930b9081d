mod common;

use std::fs;

use common::{csv_snapshot, run_cli, SMALL_MASS_CHECK};
use snls_lab::format::read_record;
use snls_lab::runner::state_file;

fn verdict(summary: &str) -> &str {
    summary.lines().last().unwrap().split_whitespace().nth(1).unwrap()
}

#[test]
fn worker_count_does_not_change_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let eight = tmp.path().join("eight");
    assert_eq!(run_cli(&one, SMALL_MASS_CHECK, &["--out", one.to_str().unwrap(), "--workers", "1"]).0, 0);
    assert_eq!(run_cli(&eight, SMALL_MASS_CHECK, &["--out", eight.to_str().unwrap(), "--workers", "8"]).0, 0);
    let (a, b) = (csv_snapshot(&one), csv_snapshot(&eight));
    assert!(a.len() >= 6, "{:?}", a.keys());
    assert_eq!(a, b);
}

#[test]
fn env_var_sets_workers_without_changing_output() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_cli(&a, SMALL_MASS_CHECK, &["--out", a.to_str().unwrap()]);
    let cfg = b.with_extension("config");
    fs::write(&cfg, SMALL_MASS_CHECK).unwrap();
    let status = std::process::Command::new(common::bin())
        .args(["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("SNLS_LAB_WORKERS", "3")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(csv_snapshot(&a), csv_snapshot(&b));

    let bad = std::process::Command::new(common::bin())
        .args(["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("SNLS_LAB_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("SNLS_LAB_WORKERS"));
}

#[test]
fn interrupted_and_resumed_run_matches_a_straight_run() {
    let tmp = tempfile::tempdir().unwrap();
    let straight = tmp.path().join("straight");
    let split = tmp.path().join("split");
    assert_eq!(run_cli(&straight, SMALL_MASS_CHECK, &["--out", straight.to_str().unwrap()]).0, 0);

    let (code, stdout, _) =
        run_cli(&split, SMALL_MASS_CHECK, &["--out", split.to_str().unwrap(), "--halt-after", "0.5", "--workers", "3"]);
    assert_eq!(code, 3, "{stdout}");
    assert!(fs::read_to_string(split.join("summary.txt")).unwrap().contains("HALTED"));
    let partial = read_record(&state_file(&split.join("state"), 2)).unwrap();
    assert_eq!(partial.len(), 3);
    assert!(partial.meta.rng_cursor.is_some());

    let (code, stdout, _) = run_cli(&split, SMALL_MASS_CHECK, &["--resume", split.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(csv_snapshot(&straight), csv_snapshot(&split));
}

#[test]
fn resume_at_zero_equals_fresh_run() {
    let tmp = tempfile::tempdir().unwrap();
    let fresh = tmp.path().join("fresh");
    let split = tmp.path().join("split");
    run_cli(&fresh, SMALL_MASS_CHECK, &["--out", fresh.to_str().unwrap()]);
    assert_eq!(run_cli(&split, SMALL_MASS_CHECK, &["--out", split.to_str().unwrap(), "--halt-after", "0"]).0, 3);
    assert_eq!(read_record(&state_file(&split.join("state"), 0)).unwrap().len(), 1);
    assert_eq!(run_cli(&split, SMALL_MASS_CHECK, &["--resume", split.to_str().unwrap()]).0, 0);
    assert_eq!(csv_snapshot(&fresh), csv_snapshot(&split));
}

#[test]
fn resumed_gamma_sweep_matches_a_straight_run() {
    let cfg = "\
experiment=gamma-sweep
grid.L=32
grid.N=64
flow.dt=0.01
flow.horizon=2
flow.checkpoint_every=0.25
ensemble.paths=3
sweep.gammas=2,0.1
sweep.horizons=1,2
";
    let tmp = tempfile::tempdir().unwrap();
    let straight = tmp.path().join("straight");
    let split = tmp.path().join("split");
    let (code, stdout, _) = run_cli(&straight, cfg, &["--out", straight.to_str().unwrap()]);
    assert!(code == 0 || code == 1, "{stdout}");
    assert_eq!(run_cli(&split, cfg, &["--out", split.to_str().unwrap(), "--halt-after", "1.25"]).0, 3);
    assert_eq!(run_cli(&split, cfg, &["--resume", split.to_str().unwrap()]).0, code);
    let snap = csv_snapshot(&straight);
    assert!(snap.contains_key(std::path::Path::new("sweep.csv")));
    assert_eq!(snap, csv_snapshot(&split));
}

#[test]
fn resume_refuses_a_changed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    run_cli(&dir, SMALL_MASS_CHECK, &["--out", dir.to_str().unwrap(), "--halt-after", "0.5"]);
    let changed = format!("{SMALL_MASS_CHECK}noise.gamma=0.7\n");
    let (code, _, stderr) = run_cli(&dir, &changed, &["--resume", dir.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("resolved.config") && stderr.contains("noise.gamma"), "{stderr}");
}

#[test]
fn resume_names_a_corrupted_state_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    run_cli(&dir, SMALL_MASS_CHECK, &["--out", dir.to_str().unwrap(), "--halt-after", "0.5"]);
    let victim = state_file(&dir.join("state"), 1);
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() - 100]).unwrap();
    let (code, _, stderr) = run_cli(&dir, SMALL_MASS_CHECK, &["--resume", dir.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("path-0001.rec") && stderr.contains("truncated"), "{stderr}");
}

#[test]
fn config_errors_exit_nonzero_with_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("bad");
    let (code, _, stderr) = run_cli(&dir, "grid.N=100\n", &["--out", dir.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("grid.N") && stderr.contains("power of two"), "{stderr}");
    assert!(!dir.exists());
}

#[test]
fn resolved_config_is_echoed_and_reparses() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("echo");
    run_cli(&dir, SMALL_MASS_CHECK, &["--out", dir.to_str().unwrap()]);
    let text = fs::read_to_string(dir.join("resolved.config")).unwrap();
    let parsed = snls_lab::ExperimentConfig::parse(&text).unwrap();
    assert_eq!(parsed, snls_lab::ExperimentConfig::parse(SMALL_MASS_CHECK).unwrap());
}

#[test]
fn summary_verdict_matches_exit_code() {
    let cases: [(&str, i32); 6] = [
        (SMALL_MASS_CHECK, 0),
        ("experiment=dissipation-check\ngrid.N=64\ngrid.L=32\nflow.horizon=1\nflow.dt=0.002", 0),
        ("experiment=dissipation-check\ngrid.N=64\ngrid.L=32\nflow.horizon=1\nflow.dt=0.05\nflow.checkpoint_every=0.5\nnoise.gamma=0\nnoise.v0=3", 1),
        ("experiment=dispersive-check\ngrid.N=256\ngrid.L=64\ndispersive.times=1,2,4", 0),
        ("experiment=burkholder-check\nensemble.paths=256\nflow.dt=0.01\nburkholder.repeats=2", 0),
        ("experiment=mass-check\ngrid.N=64\ngrid.L=32\nflow.horizon=0.1\nflow.checkpoint_every=0.05\ninit.amplitude=1e7\nensemble.paths=2\nensemble.seed=9", 2),
    ];
    let tmp = tempfile::tempdir().unwrap();
    for (i, (cfg, expected)) in cases.iter().enumerate() {
        let dir = tmp.path().join(format!("case{i}"));
        let (code, stdout, _) = run_cli(&dir, cfg, &["--out", dir.to_str().unwrap()]);
        let summary = fs::read_to_string(dir.join("summary.txt")).unwrap();
        assert_eq!(code, *expected, "{cfg}\n{summary}");
        assert_eq!(stdout, summary);
        let want = ["pass", "fail", "abort"][code as usize];
        assert_eq!(verdict(&summary), want, "{summary}");
        match code {
            0 => assert!(!summary.contains("FAIL ") && !summary.contains("ABORT "), "{summary}"),
            1 => assert!(summary.contains("FAIL ") && !summary.contains("ABORT "), "{summary}"),
            _ => assert!(summary.contains("ABORT "), "{summary}"),
        }
        if code == 2 {
            assert!(summary.contains("seed 9"), "{summary}");
        }
    }
}

#[test]
fn small_box_dispersive_run_warns_and_still_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("box");
    let cfg = "experiment=dispersive-check\ngrid.N=128\ngrid.L=16\ndispersive.times=1,2,4,8";
    let (_, stdout, stderr) = run_cli(&dir, cfg, &["--out", dir.to_str().unwrap()]);
    assert!(stderr.contains("box too small"), "{stderr}");
    assert!(stdout.contains("WARN box too small"));
    let csv = fs::read_to_string(dir.join("dispersive.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn halt_is_refused_for_presets_without_state() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("halt");
    let (code, _, stderr) =
        run_cli(&dir, "experiment=dispersive-check", &["--out", dir.to_str().unwrap(), "--halt-after", "1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--halt-after"), "{stderr}");
}

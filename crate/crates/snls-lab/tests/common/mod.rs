#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_snls-lab")
}

/// Runs `snls-lab run` with a config written next to `dir`.
pub fn run_cli(dir: &Path, config: &str, extra: &[&str]) -> (i32, String, String) {
    let cfg = dir.with_extension("config");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(bin())
        .arg("run")
        .arg(&cfg)
        .args(extra)
        .env_remove("SNLS_LAB_WORKERS")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Every CSV under `dir`, keyed by relative path.
pub fn csv_snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Small SNLS ensemble that finishes in about a second.
pub const SMALL_MASS_CHECK: &str = "\
experiment=mass-check
grid.L=32
grid.N=64
flow.dt=0.002
flow.horizon=1
flow.checkpoint_every=0.25
ensemble.paths=4
";

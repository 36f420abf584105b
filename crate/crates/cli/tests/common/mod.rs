#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mlpcast")
}

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Runs the binary with `args`, with `MLPCAST_SEED` cleared unless `env_seed` is given.
pub fn mlpcast(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("MLPCAST_SEED");
    if let Some(s) = env_seed {
        cmd.env("MLPCAST_SEED", s);
    }
    cmd.output().expect("spawn mlpcast")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn dir_entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

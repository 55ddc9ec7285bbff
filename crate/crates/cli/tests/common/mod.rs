#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nrpa_core::data::RawRecord;
use nrpa_core::evaluation::make_synthetic_corpus;

pub const TINY_CONFIG: &str = "\
word_dim = 8
id_dim = 4
num_filters = 6
attention_dim = 6
review_len = 8
reviews_per_owner = 4
fm_factors = 3
learning_rate = 0.01
batch_size = 16
max_epochs = 4
patience = 3
seed = 7
";

pub fn nrpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrpa"))
        .args(args)
        .output()
        .expect("nrpa binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs and insists on exit 0.
pub fn nrpa_ok(args: &[&str]) -> String {
    let out = nrpa(args);
    assert!(
        out.status.success(),
        "nrpa {args:?} failed with {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    stdout(&out)
}

pub fn csv_lines(records: &[RawRecord]) -> String {
    records
        .iter()
        .map(|r| format!("{},{},{:?},{}\n", r.user, r.item, r.rating, r.text))
        .collect()
}

pub fn write_corpus(dir: &Path, seed: u64, users: usize, items: usize) -> PathBuf {
    let path = dir.join("reviews.csv");
    fs::write(
        &path,
        csv_lines(&make_synthetic_corpus(seed, users, items).records),
    )
    .unwrap();
    path
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Prepares a corpus, returning the dataset directory.
pub fn prepared(dir: &Path, seed: u64, users: usize, items: usize) -> PathBuf {
    let csv = write_corpus(dir, seed, users, items);
    let data = dir.join("data");
    nrpa_ok(&[
        "prepare",
        "--input",
        s(&csv),
        "--format",
        "csv",
        "--out",
        s(&data),
        "--seed",
        "3",
    ]);
    data
}

/// Prepared dataset plus a trained run directory using [`TINY_CONFIG`].
pub fn trained(dir: &Path) -> (PathBuf, PathBuf) {
    let data = prepared(dir, 11, 24, 16);
    let config = write_config(dir, "tiny.conf", TINY_CONFIG);
    let run = dir.join("run");
    nrpa_ok(&[
        "train",
        "--data",
        s(&data),
        "--config",
        s(&config),
        "--out",
        s(&run),
    ]);
    (data, run)
}

pub fn parse_mse(out: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix("mse="))
        .expect("mse line")
        .trim()
        .parse()
        .expect("mse parses")
}

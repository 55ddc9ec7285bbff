use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nrpa_core::data::DATASET_FILES;
use nrpa_core::training::TrainConfig;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Record of one training run, written next to its checkpoint.
pub struct RunManifest {
    pub config: TrainConfig,
    pub dataset: PathBuf,
    pub dataset_sha256: String,
    pub checkpoint: PathBuf,
    pub history: PathBuf,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    /// Pretrained vector file and how many vocabulary rows it covered.
    pub word_vectors: Option<(PathBuf, usize)>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset = {}", self.dataset.display());
        let _ = writeln!(s, "dataset_sha256 = {}", self.dataset_sha256);
        let _ = writeln!(s, "seed = {}", self.config.seed);
        let _ = writeln!(s, "checkpoint = {}", self.checkpoint.display());
        let _ = writeln!(s, "history = {}", self.history.display());
        let _ = writeln!(s, "started_unix = {}", self.started_unix);
        let _ = writeln!(s, "finished_unix = {}", self.finished_unix);
        let _ = writeln!(s, "epochs_run = {}", self.epochs_run);
        let _ = writeln!(s, "best_epoch = {}", self.best_epoch);
        let _ = writeln!(s, "best_val_mse = {:?}", self.best_val_mse);
        if let Some((path, n)) = &self.word_vectors {
            let _ = writeln!(s, "word_vectors = {}", path.display());
            let _ = writeln!(s, "word_vectors_loaded = {n}");
        }
        s.push_str("\n[config]\n");
        s.push_str(&self.config.to_text());
        s
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// SHA-256 over every dataset file, each prefixed by its name and length.
pub fn dataset_fingerprint(dir: &Path) -> CliResult<String> {
    let mut hasher = Sha256::new();
    for name in DATASET_FILES {
        let path = dir.join(name);
        let bytes =
            fs::read(&path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

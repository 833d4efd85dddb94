//! Run records as JSON lines. The last line of a finished run is a
//! `complete` entry; a record without it was interrupted.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub init: u64,
    pub shuffle: u64,
    pub train_noise: u64,
    pub eval: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub snr_db: f64,
    pub receiver: String,
    pub ssim: f64,
    pub psnr_db: f64,
    pub mean_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordEntry {
    Header {
        run_id: String,
        stage: String,
        config: String,
        corpus: String,
        seeds: SeedRecord,
    },
    Epoch {
        epoch: usize,
        loss: f64,
        bob_distortion: f64,
        eve_blackness_distance: f64,
        penalty_active_fraction: f64,
        seconds: f64,
    },
    Eval {
        channel: String,
        #[serde(flatten)]
        row: EvalRow,
    },
    Checkpoint {
        path: String,
    },
    Failure {
        message: String,
    },
    Complete {
        wall_seconds: f64,
    },
}

/// Append-only writer; every entry is flushed as soon as it is written.
#[derive(Debug)]
pub struct RecordWriter {
    path: PathBuf,
    file: File,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(RecordWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        Ok(RecordWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, entry: &RecordEntry) -> Result<()> {
        let mut line = serde_json::to_vec(entry)?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|_| self.file.flush())
            .map_err(|e| HarnessError::io(&self.path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub path: PathBuf,
    pub entries: Vec<RecordEntry>,
}

impl RunRecord {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| HarnessError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| HarnessError::Record {
                path: path.to_path_buf(),
                reason: format!("line {}: {e}", i + 1),
            })?;
            entries.push(entry);
        }
        Ok(RunRecord {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.entries.last(), Some(RecordEntry::Complete { .. }))
    }

    pub fn run_id(&self) -> Option<&str> {
        self.entries.iter().find_map(|e| match e {
            RecordEntry::Header { run_id, .. } => Some(run_id.as_str()),
            _ => None,
        })
    }

    pub fn config_text(&self) -> Option<&str> {
        self.entries.iter().find_map(|e| match e {
            RecordEntry::Header { config, .. } => Some(config.as_str()),
            _ => None,
        })
    }

    pub fn losses(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                RecordEntry::Epoch { loss, .. } => Some(*loss),
                _ => None,
            })
            .collect()
    }

    pub fn eval_rows(&self) -> Vec<(&str, &EvalRow)> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                RecordEntry::Eval { channel, row } => Some((channel.as_str(), row)),
                _ => None,
            })
            .collect()
    }
}

/// `<out>/<run_id>/{config.cfg, record.jsonl, checkpoints/, panels/, plots/}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(out_dir: &Path, run_id: &str) -> Result<Self> {
        let root = out_dir.join(run_id);
        for sub in ["checkpoints", "panels", "plots"] {
            let d = root.join(sub);
            fs::create_dir_all(&d).map_err(|e| HarnessError::io(&d, e))?;
        }
        Ok(RunDir { root })
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.cfg")
    }

    pub fn record_path(&self) -> PathBuf {
        self.root.join("record.jsonl")
    }

    pub fn checkpoint_path(&self, name: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("{name}.ckpt"))
    }

    pub fn panels(&self) -> PathBuf {
        self.root.join("panels")
    }

    pub fn plots(&self) -> PathBuf {
        self.root.join("plots")
    }
}

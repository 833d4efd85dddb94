//! Binary checkpoint: magic, version, JSON header, then little-endian f64
//! parameter data (encoder tensors, then decoder tensors, in header order).
//!
//! ```text
//! b"SEMCOMCK" | u32 version | u64 header_len | header JSON | f64 data...
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use semcom_core::codec::CodecConfig;
use semcom_core::params::ParamSet;
use semcom_core::pipeline::JscSystem;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"SEMCOMCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecRecord {
    pub num_filters: usize,
    pub latent_channels: usize,
    pub downsample_stages: usize,
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
}

impl From<&CodecConfig> for CodecRecord {
    fn from(c: &CodecConfig) -> Self {
        CodecRecord {
            num_filters: c.num_filters,
            latent_channels: c.latent_channels,
            downsample_stages: c.downsample_stages,
            input_channels: c.input_channels,
            input_height: c.input_height,
            input_width: c.input_width,
        }
    }
}

impl From<CodecRecord> for CodecConfig {
    fn from(c: CodecRecord) -> Self {
        CodecConfig {
            num_filters: c.num_filters,
            latent_channels: c.latent_channels,
            downsample_stages: c.downsample_stages,
            input_channels: c.input_channels,
            input_height: c.input_height,
            input_width: c.input_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub run_id: String,
    /// Description of the training corpus (path or synthetic spec).
    pub corpus: String,
    /// Full run configuration in config-file form.
    pub config: String,
    pub epochs: usize,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub codec: CodecRecord,
    pub power: f64,
    pub encoder: Vec<TensorRecord>,
    pub decoder: Vec<TensorRecord>,
    pub meta: CheckpointMeta,
}

fn layout(params: &ParamSet) -> Vec<TensorRecord> {
    params
        .iter()
        .map(|p| TensorRecord {
            name: p.name.clone(),
            shape: p.shape.clone(),
        })
        .collect()
}

pub fn save(path: &Path, system: &JscSystem, meta: CheckpointMeta) -> Result<()> {
    let header = CheckpointHeader {
        codec: system.config().into(),
        power: system.power,
        encoder: layout(system.encoder.params()),
        decoder: layout(system.decoder.params()),
        meta,
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(
        20 + json.len() + 8 * (system.encoder.params().num_scalars() + system.decoder.params().num_scalars()),
    );
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for set in [system.encoder.params(), system.decoder.params()] {
        for p in set.iter() {
            for v in &p.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    // write-then-rename so a crash never leaves a truncated checkpoint behind
    let tmp = path.with_extension("ckpt.partial");
    let mut f = fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    f.write_all(&buf).map_err(|e| HarnessError::io(&tmp, e))?;
    f.sync_all().map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn invalid(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Checkpoint {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn fill(params: &mut ParamSet, expected: &[TensorRecord], data: &mut &[u8], path: &Path) -> Result<()> {
    if layout(params) != expected {
        return Err(invalid(path, "tensor layout does not match the codec configuration"));
    }
    for p in params.iter_mut() {
        for v in p.data.iter_mut() {
            let (bytes, rest) = data
                .split_first_chunk::<8>()
                .ok_or_else(|| invalid(path, "truncated parameter data"))?;
            *v = f64::from_le_bytes(*bytes);
            *data = rest;
        }
    }
    Ok(())
}

/// Reads the header only.
pub fn read_header(path: &Path) -> Result<CheckpointHeader> {
    let mut f = open(path)?;
    let mut fixed = [0u8; 20];
    f.read_exact(&mut fixed)
        .map_err(|_| invalid(path, "file too short"))?;
    let len = check_prefix(path, &fixed)?;
    let mut json = vec![0u8; len];
    f.read_exact(&mut json)
        .map_err(|_| invalid(path, "truncated header"))?;
    serde_json::from_slice(&json).map_err(|e| invalid(path, e.to_string()))
}

fn open(path: &Path) -> Result<fs::File> {
    if !path.is_file() {
        return Err(HarnessError::CheckpointNotFound(path.to_path_buf()));
    }
    fs::File::open(path).map_err(|e| HarnessError::io(path, e))
}

fn check_prefix(path: &Path, fixed: &[u8; 20]) -> Result<usize> {
    if &fixed[..8] != MAGIC {
        return Err(invalid(path, "not a checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(fixed[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(invalid(path, format!("unsupported version {version}")));
    }
    Ok(u64::from_le_bytes(fixed[12..20].try_into().expect("8 bytes")) as usize)
}

pub fn load(path: &Path) -> Result<(JscSystem, CheckpointHeader)> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| HarnessError::io(path, e))?;
    let fixed: &[u8; 20] = bytes
        .first_chunk()
        .ok_or_else(|| invalid(path, "file too short"))?;
    let len = check_prefix(path, fixed)?;
    let json = bytes
        .get(20..20 + len)
        .ok_or_else(|| invalid(path, "truncated header"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(json).map_err(|e| invalid(path, e.to_string()))?;
    let config: CodecConfig = header.codec.into();
    let mut system = JscSystem::new(&config, 0, header.power)
        .map_err(|e| invalid(path, e.to_string()))?;
    let mut data = &bytes[20 + len..];
    fill(system.encoder.params_mut(), &header.encoder, &mut data, path)?;
    fill(system.decoder.params_mut(), &header.decoder, &mut data, path)?;
    if !data.is_empty() {
        return Err(invalid(path, "trailing bytes after parameter data"));
    }
    Ok((system, header))
}

/// Loads a checkpoint and requires its codec and power budget to match.
pub fn load_matching(path: &Path, codec: &CodecConfig, power: f64) -> Result<(JscSystem, CheckpointHeader)> {
    let (system, header) = load(path)?;
    let want = CodecRecord::from(codec);
    if header.codec != want {
        return Err(HarnessError::CheckpointMismatch {
            path: path.to_path_buf(),
            reason: format!("checkpoint codec {:?}, configured {:?}", header.codec, want),
        });
    }
    if header.power != power {
        return Err(HarnessError::CheckpointMismatch {
            path: path.to_path_buf(),
            reason: format!("checkpoint power {}, configured {}", header.power, power),
        });
    }
    Ok((system, header))
}

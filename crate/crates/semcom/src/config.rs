//! Flat `key = value` run configuration with dotted section names.
//!
//! ```text
//! # comments start with '#'
//! channel.kind = miso_mrt
//! channel.snr_db = 10
//! objective.kind = secure_mse
//! objective.lambda = 0.5
//! ```
//!
//! Unknown keys and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use semcom_core::channel::{ChannelConfig, ChannelKind};
use semcom_core::codec::CodecConfig;
use semcom_core::objectives::{ObjectiveConfig, ObjectiveKind};
use semcom_core::optim::AdamConfig;
use semcom_core::rng::derive_seed;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Receiver {
    Bob,
    Eve,
}

impl Receiver {
    pub fn as_str(self) -> &'static str {
        match self {
            Receiver::Bob => "bob",
            Receiver::Eve => "eve",
        }
    }
}

impl FromStr for Receiver {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bob" => Ok(Receiver::Bob),
            "eve" => Ok(Receiver::Eve),
            _ => Err(format!("unknown receiver {s:?} (expected bob or eve)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub snr_points_db: Vec<f64>,
    pub receivers: Vec<Receiver>,
    pub num_eval_batches: usize,
    pub batch_size: usize,
    /// Overrides the seed derived from the master seed.
    pub eval_seed: Option<u64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            snr_points_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            receivers: vec![Receiver::Bob, Receiver::Eve],
            num_eval_batches: 8,
            batch_size: 32,
            eval_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataConfig {
    pub root: Option<PathBuf>,
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    pub resize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub codec: CodecConfig,
    pub power: f64,
    pub channel: ChannelConfig,
    pub objective: ObjectiveConfig,
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub pretrain_checkpoint: Option<PathBuf>,
    pub master_seed: u64,
    pub run_id: Option<String>,
    pub data: DataConfig,
    pub sweep: SweepSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            codec: CodecConfig::default(),
            power: 1.0,
            channel: ChannelConfig::awgn(10.0),
            objective: ObjectiveConfig::mse(),
            optimizer: AdamConfig::default(),
            batch_size: 32,
            epochs: 50,
            pretrain_checkpoint: None,
            master_seed: 0,
            run_id: None,
            data: DataConfig::default(),
            sweep: SweepSpec::default(),
        }
    }
}

/// Seeds derived from the master seed by labeled stream splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub init: u64,
    pub shuffle: u64,
    pub train_noise: u64,
    pub eval: u64,
}

const KEYS: &[&str] = &[
    "codec.num_filters",
    "codec.latent_channels",
    "codec.downsample_stages",
    "codec.image_size",
    "codec.power",
    "channel.kind",
    "channel.snr_db",
    "channel.eve_noise_ratio_db",
    "channel.antennas",
    "objective.kind",
    "objective.lambda",
    "objective.epsilon",
    "optimizer.kind",
    "optimizer.learning_rate",
    "train.batch_size",
    "train.epochs",
    "train.pretrain_checkpoint",
    "train.seed",
    "train.run_id",
    "data.root",
    "data.train_per_class",
    "data.test_per_class",
    "data.resize",
    "sweep.snr_db",
    "sweep.receivers",
    "sweep.num_batches",
    "sweep.batch_size",
    "sweep.seed",
];

pub fn channel_kind_name(kind: ChannelKind) -> &'static str {
    match kind {
        ChannelKind::Noiseless => "noiseless",
        ChannelKind::Awgn => "awgn",
        ChannelKind::MisoMrt => "miso_mrt",
    }
}

pub fn parse_channel_kind(s: &str) -> std::result::Result<ChannelKind, String> {
    match s {
        "noiseless" => Ok(ChannelKind::Noiseless),
        "awgn" => Ok(ChannelKind::Awgn),
        "miso_mrt" | "miso" => Ok(ChannelKind::MisoMrt),
        _ => Err(format!("unknown channel kind {s:?} (expected awgn, miso_mrt or noiseless)")),
    }
}

pub fn objective_kind_name(kind: ObjectiveKind) -> &'static str {
    match kind {
        ObjectiveKind::Mse => "mse",
        ObjectiveKind::SecureMse => "secure_mse",
    }
}

fn parse_objective_kind(s: &str) -> std::result::Result<ObjectiveKind, String> {
    match s {
        "mse" => Ok(ObjectiveKind::Mse),
        "secure_mse" => Ok(ObjectiveKind::SecureMse),
        _ => Err(format!("unknown objective kind {s:?} (expected mse or secure_mse)")),
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("expected a number, got {s:?}")),
    }
}

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(item).collect()
}

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some((line, raw)) => parse(&raw)
                .map(Some)
                .map_err(|message| HarnessError::Config {
                    line,
                    message: format!("{key}: {message}"),
                }),
        }
    }
}

fn num<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse {s:?}"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| HarnessError::Config {
                line,
                message: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(HarnessError::Config {
                    line,
                    message: format!("unknown key {key:?}"),
                });
            }
            if values.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(HarnessError::Config {
                    line,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        let mut e = Entries { values };
        let mut cfg = TrainConfig::default();

        if let Some(v) = e.take("codec.num_filters", num)? {
            cfg.codec.num_filters = v;
        }
        if let Some(v) = e.take("codec.latent_channels", num)? {
            cfg.codec.latent_channels = v;
        }
        if let Some(v) = e.take("codec.downsample_stages", num)? {
            cfg.codec.downsample_stages = v;
        }
        if let Some(v) = e.take("codec.image_size", num::<usize>)? {
            cfg.codec.input_height = v;
            cfg.codec.input_width = v;
        }
        if let Some(v) = e.take("codec.power", parse_f64)? {
            cfg.power = v;
        }

        // the kind picks the defaults for P and N; explicit keys override them
        let kind = e.take("channel.kind", parse_channel_kind)?.unwrap_or(ChannelKind::Awgn);
        let snr = e.take("channel.snr_db", parse_f64)?.unwrap_or(10.0);
        cfg.channel = match kind {
            ChannelKind::Awgn => ChannelConfig::awgn(snr),
            ChannelKind::MisoMrt => ChannelConfig::miso(snr),
            ChannelKind::Noiseless => ChannelConfig::noiseless(),
        };
        if let Some(v) = e.take("channel.eve_noise_ratio_db", parse_f64)? {
            cfg.channel.eve_noise_ratio_db = v;
        }
        if let Some(v) = e.take("channel.antennas", num)? {
            cfg.channel.antennas = v;
        }

        let okind = e.take("objective.kind", parse_objective_kind)?.unwrap_or(ObjectiveKind::Mse);
        let defaults = ObjectiveConfig::secure(0.5, 0.05);
        cfg.objective = ObjectiveConfig {
            kind: okind,
            lambda: e.take("objective.lambda", parse_f64)?.unwrap_or(defaults.lambda),
            epsilon: e.take("objective.epsilon", parse_f64)?.unwrap_or(defaults.epsilon),
        };

        e.take("optimizer.kind", |s| match s {
            "adam" => Ok(()),
            _ => Err(format!("unsupported optimizer {s:?} (only adam)")),
        })?;
        if let Some(v) = e.take("optimizer.learning_rate", parse_f64)? {
            cfg.optimizer.learning_rate = v;
        }

        if let Some(v) = e.take("train.batch_size", num)? {
            cfg.batch_size = v;
        }
        if let Some(v) = e.take("train.epochs", num)? {
            cfg.epochs = v;
        }
        cfg.pretrain_checkpoint = e.take("train.pretrain_checkpoint", |s| Ok(PathBuf::from(s)))?;
        if let Some(v) = e.take("train.seed", num)? {
            cfg.master_seed = v;
        }
        cfg.run_id = e.take("train.run_id", |s| Ok(s.to_string()))?;

        cfg.data.root = e.take("data.root", |s| Ok(PathBuf::from(s)))?;
        cfg.data.train_per_class = e.take("data.train_per_class", num)?;
        cfg.data.test_per_class = e.take("data.test_per_class", num)?;
        if let Some(v) = e.take("data.resize", boolean)? {
            cfg.data.resize = v;
        }

        if let Some(v) = e.take("sweep.snr_db", |s| parse_list(s, parse_f64))? {
            cfg.sweep.snr_points_db = v;
        }
        if let Some(v) = e.take("sweep.receivers", |s| parse_list(s, Receiver::from_str))? {
            cfg.sweep.receivers = v;
        }
        if let Some(v) = e.take("sweep.num_batches", num)? {
            cfg.sweep.num_eval_batches = v;
        }
        if let Some(v) = e.take("sweep.batch_size", num)? {
            cfg.sweep.batch_size = v;
        }
        cfg.sweep.eval_seed = e.take("sweep.seed", num)?;

        debug_assert!(e.values.is_empty());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| HarnessError::Config { line: 0, message };
        self.codec.validate()?;
        self.channel.validate()?;
        self.objective.validate()?;
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(bad(format!("codec.power must be positive, got {}", self.power)));
        }
        if self.batch_size == 0 || self.sweep.batch_size == 0 {
            return Err(bad("batch sizes must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(bad("train.epochs must be positive".into()));
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(bad("optimizer.learning_rate must be positive".into()));
        }
        if self.sweep.receivers.is_empty() {
            return Err(bad("sweep.receivers must name bob and/or eve".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Seeds {
        let m = self.master_seed;
        Seeds {
            init: derive_seed(m, "init", 0),
            shuffle: derive_seed(m, "shuffle", 0),
            train_noise: derive_seed(m, "train-noise", 0),
            eval: self.sweep.eval_seed.unwrap_or_else(|| derive_seed(m, "eval", 0)),
        }
    }

    /// Canonical text form; `parse(to_text())` returns an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("codec.num_filters", self.codec.num_filters.to_string());
        put("codec.latent_channels", self.codec.latent_channels.to_string());
        put("codec.downsample_stages", self.codec.downsample_stages.to_string());
        put("codec.image_size", self.codec.input_height.to_string());
        put("codec.power", fmt_f64(self.power));
        put("channel.kind", channel_kind_name(self.channel.kind).into());
        if self.channel.kind != ChannelKind::Noiseless {
            put("channel.snr_db", fmt_f64(self.channel.snr_bob_db));
            put("channel.eve_noise_ratio_db", fmt_f64(self.channel.eve_noise_ratio_db));
            put("channel.antennas", self.channel.antennas.to_string());
        }
        put("objective.kind", objective_kind_name(self.objective.kind).into());
        put("objective.lambda", fmt_f64(self.objective.lambda));
        put("objective.epsilon", fmt_f64(self.objective.epsilon));
        put("optimizer.kind", "adam".into());
        put("optimizer.learning_rate", fmt_f64(self.optimizer.learning_rate));
        put("train.batch_size", self.batch_size.to_string());
        put("train.epochs", self.epochs.to_string());
        if let Some(p) = &self.pretrain_checkpoint {
            put("train.pretrain_checkpoint", p.display().to_string());
        }
        put("train.seed", self.master_seed.to_string());
        if let Some(id) = &self.run_id {
            put("train.run_id", id.clone());
        }
        if let Some(p) = &self.data.root {
            put("data.root", p.display().to_string());
        }
        if let Some(n) = self.data.train_per_class {
            put("data.train_per_class", n.to_string());
        }
        if let Some(n) = self.data.test_per_class {
            put("data.test_per_class", n.to_string());
        }
        put("data.resize", self.data.resize.to_string());
        let snrs: Vec<String> = self.sweep.snr_points_db.iter().map(|&v| fmt_f64(v)).collect();
        put("sweep.snr_db", snrs.join(", "));
        let rx: Vec<&str> = self.sweep.receivers.iter().map(|r| r.as_str()).collect();
        put("sweep.receivers", rx.join(", "));
        put("sweep.num_batches", self.sweep.num_eval_batches.to_string());
        put("sweep.batch_size", self.sweep.batch_size.to_string());
        if let Some(seed) = self.sweep.eval_seed {
            put("sweep.seed", seed.to_string());
        }
        s
    }
}

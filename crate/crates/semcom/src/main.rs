use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use semcom::checkpoint;
use semcom::config::TrainConfig;
use semcom::dataset::{load_dataset, resolve_data_root, LoadOptions};
use semcom::harness::{
    append_sweep, emit_plots, evaluate_sweep, load_corpus, render_examples, run_training,
    seed_record, sweep_rows, Stage,
};
use semcom::record::{RecordEntry, RecordWriter, RunDir, RunRecord};
use semcom::synth::{generate_corpus, SynthSpec};
use semcom::{HarnessError, Result};
use semcom_core::data::SplitKind;

#[derive(Parser)]
#[command(name = "semcom", version, about = "Secure JSC image transmission experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Corpus root (falls back to data.root, then SECSEMCOM_DATA_ROOT)
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// Overrides train.seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Noiseless MSE pretraining
    Pretrain {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Channel-specific training followed by an SNR sweep
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Pretrained checkpoint to start from (overrides train.pretrain_checkpoint)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Skip the evaluation sweep after training
        #[arg(long)]
        no_sweep: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluates a checkpoint over the configured SNR grid
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to the configuration stored in the checkpoint
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Writes original | Bob | Eve panels for test images
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated test source ids, e.g. test/dog/00003
        #[arg(long, value_delimiter = ',', required = true)]
        ids: Vec<String>,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[command(flatten)]
        common: Common,
    },
    /// SSIM-vs-SNR figure and CSV table from run records
    Plot {
        #[arg(long = "record", required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value = "runs/plots")]
        out_dir: PathBuf,
    },
    /// Writes a procedural corpus in the Linnaeus directory layout
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 128)]
        size: u32,
        #[arg(long, default_value_t = 1200)]
        train_per_class: usize,
        #[arg(long, default_value_t = 400)]
        test_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: &Path, common: &Common) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::from_file(path)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn data_root(cfg: &TrainConfig, common: &Common) -> Result<PathBuf> {
    common
        .data_root
        .clone()
        .or_else(|| cfg.data.root.clone())
        .or_else(|| resolve_data_root(None))
        .ok_or_else(|| HarnessError::Config {
            line: 0,
            message: "no data root: pass --data-root, set data.root or SECSEMCOM_DATA_ROOT".into(),
        })
}

/// Config from `--config`, else the one stored in the checkpoint.
fn checkpoint_config(ckpt: &Path, config: Option<&Path>, common: &Common) -> Result<TrainConfig> {
    let mut cfg = match config {
        Some(p) => TrainConfig::from_file(p)?,
        None => TrainConfig::parse(&checkpoint::read_header(ckpt)?.meta.config)?,
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn print_rows(rows: &[semcom::record::EvalRow]) {
    println!("{:>8}  {:<4}  {:>8}  {:>8}  {:>8}", "snr_db", "rx", "ssim", "psnr_db", "mean");
    for r in rows {
        println!(
            "{:>8.1}  {:<4}  {:>8.4}  {:>8.3}  {:>8.4}",
            r.snr_db, r.receiver, r.ssim, r.psnr_db, r.mean_intensity
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pretrain { config, common } => {
            let cfg = load_config(&config, &common)?;
            let corpus = load_corpus(&cfg, &data_root(&cfg, &common)?)?;
            let out = run_training(&cfg, Stage::Pretrain, &corpus, &common.out_dir)?;
            println!("{}", out.checkpoint.display());
        }
        Command::Train {
            config,
            checkpoint,
            no_sweep,
            common,
        } => {
            let mut cfg = load_config(&config, &common)?;
            if checkpoint.is_some() {
                cfg.pretrain_checkpoint = checkpoint;
            }
            if let Some(p) = &cfg.pretrain_checkpoint {
                if !p.is_file() {
                    return Err(HarnessError::CheckpointNotFound(p.clone()));
                }
            }
            let corpus = load_corpus(&cfg, &data_root(&cfg, &common)?)?;
            let started = Instant::now();
            let out = run_training(&cfg, Stage::Train, &corpus, &common.out_dir)?;
            if !no_sweep {
                let points = evaluate_sweep(&out.system, &corpus.test, &cfg.sweep, &cfg.channel, cfg.seeds().eval)?;
                let rows = sweep_rows(&points);
                append_sweep(&out.dir.record_path(), &cfg.channel, &rows, started.elapsed().as_secs_f64())?;
                print_rows(&rows);
            }
            println!("{}", out.checkpoint.display());
        }
        Command::Sweep {
            checkpoint: ckpt,
            config,
            common,
        } => {
            let started = Instant::now();
            let cfg = checkpoint_config(&ckpt, config.as_deref(), &common)?;
            let (system, header) = checkpoint::load_matching(&ckpt, &cfg.codec, cfg.power)?;
            let test = load_dataset(
                &data_root(&cfg, &common)?,
                SplitKind::Test,
                &LoadOptions {
                    size: (cfg.codec.input_height as u32, cfg.codec.input_width as u32),
                    resize: cfg.data.resize,
                    per_class_limit: cfg.data.test_per_class,
                },
            )?;
            let points = evaluate_sweep(&system, &test, &cfg.sweep, &cfg.channel, cfg.seeds().eval)?;
            let rows = sweep_rows(&points);
            let dir = RunDir::create(&common.out_dir, &header.meta.run_id)?;
            let record = dir.record_path();
            if !record.is_file() {
                RecordWriter::create(&record)?.write(&RecordEntry::Header {
                    run_id: header.meta.run_id.clone(),
                    stage: "sweep".into(),
                    config: cfg.to_text(),
                    corpus: header.meta.corpus.clone(),
                    seeds: seed_record(&cfg),
                })?;
            }
            append_sweep(&record, &cfg.channel, &rows, started.elapsed().as_secs_f64())?;
            print_rows(&rows);
        }
        Command::Render {
            checkpoint: ckpt,
            config,
            ids,
            snr_db,
            common,
        } => {
            let cfg = checkpoint_config(&ckpt, config.as_deref(), &common)?;
            let (system, header) = checkpoint::load_matching(&ckpt, &cfg.codec, cfg.power)?;
            let test = load_dataset(
                &data_root(&cfg, &common)?,
                SplitKind::Test,
                &LoadOptions {
                    size: (cfg.codec.input_height as u32, cfg.codec.input_width as u32),
                    resize: cfg.data.resize,
                    per_class_limit: cfg.data.test_per_class,
                },
            )?;
            let dir = RunDir::create(&common.out_dir, &header.meta.run_id)?;
            let panels = render_examples(
                &system,
                &test,
                &ids,
                snr_db,
                &cfg.channel,
                cfg.seeds().eval,
                &header.meta.run_id,
                &dir.panels(),
            )?;
            for p in panels {
                println!(
                    "{}  bob ssim {:.4}  eve ssim {:.4}  eve mean {:.4}",
                    p.path.display(),
                    p.bob.ssim,
                    p.eve.ssim,
                    p.eve.mean_intensity
                );
            }
        }
        Command::Plot { records, out_dir } => {
            let records = records
                .iter()
                .map(|p| RunRecord::read(p))
                .collect::<Result<Vec<_>>>()?;
            let out = emit_plots(&records, &out_dir)?;
            println!("{}\n{}", out.table.display(), out.figure.display());
        }
        Command::Synth {
            out_dir,
            size,
            train_per_class,
            test_per_class,
            seed,
        } => {
            let n = generate_corpus(
                &out_dir,
                &SynthSpec {
                    size,
                    train_per_class,
                    test_per_class,
                    seed,
                },
            )?;
            println!("wrote {n} images to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with status 2 and usage text on bad arguments
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

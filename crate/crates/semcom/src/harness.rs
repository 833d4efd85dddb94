//! Pretraining, channel-specific training, SNR sweeps, reconstruction
//! panels and plots.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::{Rgb, RgbImage};
use plotters::prelude::*;
use semcom_core::channel::ChannelConfig;
use semcom_core::data::{batch_indices, gather, BatchPlan, DatasetSplit, SplitKind};
use semcom_core::metrics::{psnr, ssim_windowed, ImageScores, MetricReport};
use semcom_core::objectives::ObjectiveConfig;
use semcom_core::pipeline::{JscSystem, StepStreams, Trainer};
use semcom_core::rng::derive_seed;
use semcom_core::{Image, Tensor};

use crate::checkpoint::{self, CheckpointMeta};
use crate::config::{channel_kind_name, objective_kind_name, Receiver, SweepSpec, TrainConfig};
use crate::dataset::{load_dataset, LoadOptions};
use crate::error::{HarnessError, Result};
use crate::record::{EvalRow, RecordEntry, RecordWriter, RunDir, RunRecord, SeedRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub train: DatasetSplit,
    pub test: DatasetSplit,
    pub description: String,
}

/// Loads both splits at the codec's input size.
pub fn load_corpus(cfg: &TrainConfig, root: &Path) -> Result<Corpus> {
    let base = LoadOptions {
        size: (cfg.codec.input_height as u32, cfg.codec.input_width as u32),
        resize: cfg.data.resize,
        per_class_limit: None,
    };
    let train = load_dataset(
        root,
        SplitKind::Train,
        &LoadOptions {
            per_class_limit: cfg.data.train_per_class,
            ..base.clone()
        },
    )?;
    let test = load_dataset(
        root,
        SplitKind::Test,
        &LoadOptions {
            per_class_limit: cfg.data.test_per_class,
            ..base
        },
    )?;
    Ok(Corpus {
        description: format!("{} ({} train / {} test)", root.display(), train.len(), test.len()),
        train,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Noiseless channel, MSE objective.
    Pretrain,
    Train,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Pretrain => "pretrain",
            Stage::Train => "train",
        }
    }
}

/// The configuration a stage actually trains with.
pub fn effective_config(cfg: &TrainConfig, stage: Stage) -> TrainConfig {
    let mut c = cfg.clone();
    if stage == Stage::Pretrain {
        c.channel = ChannelConfig::noiseless();
        c.objective = ObjectiveConfig::mse();
        c.pretrain_checkpoint = None;
    }
    c
}

fn snr_tag(snr: f64) -> String {
    if snr.is_infinite() {
        "inf".into()
    } else {
        format!("{snr}").replace('-', "m")
    }
}

pub fn default_run_id(cfg: &TrainConfig, stage: Stage) -> String {
    match stage {
        Stage::Pretrain => format!("pretrain-s{}", cfg.master_seed),
        Stage::Train => format!(
            "{}-{}-{}dB-s{}",
            channel_kind_name(cfg.channel.kind),
            objective_kind_name(cfg.objective.kind),
            snr_tag(cfg.channel.snr_bob_db),
            cfg.master_seed
        ),
    }
}

pub fn seed_record(cfg: &TrainConfig) -> SeedRecord {
    let s = cfg.seeds();
    SeedRecord {
        master: cfg.master_seed,
        init: s.init,
        shuffle: s.shuffle,
        train_noise: s.train_noise,
        eval: s.eval,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub dir: RunDir,
    pub system: JscSystem,
    pub checkpoint: PathBuf,
    pub losses: Vec<f64>,
}

/// Trains for `cfg.epochs` epochs and persists config, record and the final
/// checkpoint under `<out_dir>/<run_id>/`. A non-finite loss aborts the run
/// with a `failure` entry and no completion marker.
pub fn run_training(cfg: &TrainConfig, stage: Stage, corpus: &Corpus, out_dir: &Path) -> Result<RunOutcome> {
    let started = Instant::now();
    let cfg = effective_config(cfg, stage);
    cfg.validate()?;
    let run_id = cfg.run_id.clone().unwrap_or_else(|| default_run_id(&cfg, stage));
    let dir = RunDir::create(out_dir, &run_id)?;
    let config_text = cfg.to_text();
    fs::write(dir.config_path(), &config_text).map_err(|e| HarnessError::io(dir.config_path(), e))?;
    let mut writer = RecordWriter::create(&dir.record_path())?;
    writer.write(&RecordEntry::Header {
        run_id: run_id.clone(),
        stage: stage.as_str().into(),
        config: config_text.clone(),
        corpus: corpus.description.clone(),
        seeds: seed_record(&cfg),
    })?;

    let seeds = cfg.seeds();
    let system = match &cfg.pretrain_checkpoint {
        Some(path) => checkpoint::load_matching(path, &cfg.codec, cfg.power)?.0,
        None => JscSystem::new(&cfg.codec, seeds.init, cfg.power)?,
    };
    let channel = cfg.channel.with_seed(seeds.train_noise);
    let mut trainer = Trainer::new(system, cfg.optimizer);
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let epoch_start = Instant::now();
        let plan = BatchPlan {
            batch_size: cfg.batch_size,
            shuffle_seed: derive_seed(seeds.shuffle, "epoch", epoch as u64),
            drop_last: corpus.train.len() >= cfg.batch_size,
        };
        let (mut loss, mut bob, mut eve, mut active, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
        for indices in batch_indices(corpus.train.len(), &plan)? {
            let x = gather(&corpus.train, &indices)?;
            debug_assert!(x.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let report = match trainer.train_step(&x, &channel, &cfg.objective) {
                Ok(out) => out.report,
                Err(source) => {
                    writer.write(&RecordEntry::Failure {
                        message: format!("epoch {epoch}: {source}"),
                    })?;
                    return Err(HarnessError::Diverged { epoch, source });
                }
            };
            loss += report.total;
            bob += report.bob_distortion;
            eve += report.eve_blackness_distance;
            active += report.penalty_active_fraction;
            n += 1;
        }
        let k = n.max(1) as f64;
        losses.push(loss / k);
        log::info!("{run_id} epoch {}/{}: loss {:.6}", epoch + 1, cfg.epochs, loss / k);
        writer.write(&RecordEntry::Epoch {
            epoch,
            loss: loss / k,
            bob_distortion: bob / k,
            eve_blackness_distance: eve / k,
            penalty_active_fraction: active / k,
            seconds: epoch_start.elapsed().as_secs_f64(),
        })?;
    }

    let steps = trainer.steps();
    let system = trainer.into_system();
    let ckpt = dir.checkpoint_path("final");
    checkpoint::save(
        &ckpt,
        &system,
        CheckpointMeta {
            run_id: run_id.clone(),
            corpus: corpus.description.clone(),
            config: config_text,
            epochs: cfg.epochs,
            steps,
        },
    )?;
    writer.write(&RecordEntry::Checkpoint {
        path: ckpt.display().to_string(),
    })?;
    writer.write(&RecordEntry::Complete {
        wall_seconds: started.elapsed().as_secs_f64(),
    })?;
    Ok(RunOutcome {
        run_id,
        dir,
        system,
        checkpoint: ckpt,
        losses,
    })
}

/// Per-receiver aggregate at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub bob: Option<MetricReport>,
    pub eve: Option<MetricReport>,
}

/// Test-split batches in file order, at most `num_eval_batches` of them.
fn eval_batches(test: &DatasetSplit, sweep: &SweepSpec) -> Vec<Vec<usize>> {
    (0..test.len())
        .collect::<Vec<_>>()
        .chunks(sweep.batch_size)
        .take(sweep.num_eval_batches)
        .map(<[usize]>::to_vec)
        .collect()
}

/// Runs the frozen model at every SNR point. Batch `b` uses the same noise
/// and fading streams at every point, so points differ only in noise scale.
pub fn evaluate_sweep(
    system: &JscSystem,
    test: &DatasetSplit,
    sweep: &SweepSpec,
    channel: &ChannelConfig,
    eval_seed: u64,
) -> Result<Vec<SweepPoint>> {
    let batches = eval_batches(test, sweep);
    let want_bob = sweep.receivers.contains(&Receiver::Bob);
    let want_eve = sweep.receivers.contains(&Receiver::Eve);
    let mut points = Vec::with_capacity(sweep.snr_points_db.len());
    for &snr in &sweep.snr_points_db {
        let mut ch = *channel;
        ch.snr_bob_db = snr;
        let (mut bob, mut eve) = (Vec::new(), Vec::new());
        for (b, indices) in batches.iter().enumerate() {
            let x = gather(test, indices)?;
            let mut streams = StepStreams::new(eval_seed, "eval", b as u64);
            let realization = streams.realization(&ch)?;
            let out = system.transmit(&x, &ch, realization.as_ref(), &mut streams, want_eve)?;
            if want_bob {
                bob.extend(MetricReport::from_batch(&x, &out.bob)?.per_image);
            }
            if let Some(e) = &out.eve {
                eve.extend(MetricReport::from_batch(&x, e)?.per_image);
            }
        }
        points.push(SweepPoint {
            snr_db: snr,
            bob: want_bob.then(|| MetricReport::from_scores(bob)),
            eve: want_eve.then(|| MetricReport::from_scores(eve)),
        });
    }
    Ok(points)
}

pub fn sweep_rows(points: &[SweepPoint]) -> Vec<EvalRow> {
    let mut rows = Vec::new();
    for p in points {
        for (rx, report) in [(Receiver::Bob, &p.bob), (Receiver::Eve, &p.eve)] {
            if let Some(r) = report {
                rows.push(EvalRow {
                    snr_db: p.snr_db,
                    receiver: rx.as_str().into(),
                    ssim: r.ssim,
                    psnr_db: r.psnr_db,
                    mean_intensity: r.mean_intensity,
                });
            }
        }
    }
    rows
}

/// Appends sweep rows and a fresh completion marker to a run record.
pub fn append_sweep(record_path: &Path, channel: &ChannelConfig, rows: &[EvalRow], wall_seconds: f64) -> Result<()> {
    let mut w = RecordWriter::append(record_path)?;
    for row in rows {
        w.write(&RecordEntry::Eval {
            channel: channel_kind_name(channel.kind).into(),
            row: row.clone(),
        })?;
    }
    w.write(&RecordEntry::Complete { wall_seconds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub path: PathBuf,
    pub source_id: String,
    pub bob: ImageScores,
    pub eve: ImageScores,
}

fn to_rgb(img: &Image, panel: &mut RgbImage, x_offset: u32) {
    let (h, w) = (img.height(), img.width());
    for y in 0..h {
        for x in 0..w {
            let px = [0, 1, 2].map(|c| (img.get(c, y, x).clamp(0.0, 1.0) * 255.0).round() as u8);
            panel.put_pixel(x_offset + x as u32, y as u32, Rgb(px));
        }
    }
}

fn scores(original: &Image, recon: &Image) -> Result<ImageScores> {
    Ok(ImageScores {
        ssim: ssim_windowed(original, recon)?,
        psnr_db: psnr(original, recon)?,
        mean_intensity: recon.mean_intensity(),
    })
}

fn describe_ids(test: &DatasetSplit) -> String {
    const SHOWN: usize = 12;
    let ids: Vec<&str> = test.samples.iter().take(SHOWN).map(|s| s.source_id.as_str()).collect();
    if test.len() > SHOWN {
        format!("{}, ... ({} total)", ids.join(", "), test.len())
    } else {
        ids.join(", ")
    }
}

/// Writes one `original | Bob | Eve` PNG per id.
#[allow(clippy::too_many_arguments)]
pub fn render_examples(
    system: &JscSystem,
    test: &DatasetSplit,
    ids: &[String],
    snr_db: f64,
    channel: &ChannelConfig,
    eval_seed: u64,
    run_id: &str,
    out_dir: &Path,
) -> Result<Vec<Panel>> {
    let samples = ids
        .iter()
        .map(|id| {
            test.find(id).ok_or_else(|| HarnessError::UnknownImage {
                id: id.clone(),
                valid: describe_ids(test),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut ch = *channel;
    ch.snr_bob_db = snr_db;
    let mut panels = Vec::with_capacity(samples.len());
    for (i, sample) in samples.into_iter().enumerate() {
        let x = Tensor::from_images(&[&sample.image])?;
        let mut streams = StepStreams::new(eval_seed, "render", i as u64);
        let realization = streams.realization(&ch)?;
        let out = system.transmit(&x, &ch, realization.as_ref(), &mut streams, true)?;
        let bob = out.bob.image(0);
        let eve = out.eve.as_ref().expect("Eve requested").image(0);
        let (h, w) = (sample.image.height() as u32, sample.image.width() as u32);
        let mut panel = RgbImage::new(3 * w, h);
        to_rgb(&sample.image, &mut panel, 0);
        to_rgb(&bob, &mut panel, w);
        to_rgb(&eve, &mut panel, 2 * w);
        let name = format!(
            "{run_id}_snr{}dB_{}_original-bob-eve.png",
            snr_tag(snr_db),
            sample.source_id.replace(['/', '\\'], "-")
        );
        let path = out_dir.join(name);
        panel.save(&path).map_err(|e| HarnessError::Write {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        panels.push(Panel {
            path,
            source_id: sample.source_id.clone(),
            bob: scores(&sample.image, &bob)?,
            eve: scores(&sample.image, &eve)?,
        });
    }
    Ok(panels)
}

/// Rounds to six significant digits and prints the shortest exact form.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOutputs {
    pub table: PathBuf,
    pub figure: PathBuf,
    pub curves: usize,
    pub rows: usize,
}

struct Curve {
    label: String,
    points: Vec<(f64, f64)>,
}

fn record_label(record: &RunRecord) -> String {
    let id = record.run_id().unwrap_or("run").to_string();
    match record.config_text().map(TrainConfig::parse) {
        Some(Ok(cfg)) => format!("{} ({})", objective_kind_name(cfg.objective.kind), id),
        _ => id,
    }
}

/// SSIM-vs-SNR curves (one per record and receiver) as SVG, plus the
/// underlying rows as CSV.
pub fn emit_plots(records: &[RunRecord], out_dir: &Path) -> Result<PlotOutputs> {
    let with_rows: Vec<&RunRecord> = records.iter().filter(|r| !r.eval_rows().is_empty()).collect();
    if with_rows.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let table = out_dir.join("sweep.csv");
    let mut csv = csv::Writer::from_path(&table)?;
    csv.write_record(["run_id", "channel", "snr_db", "receiver", "ssim", "psnr_db", "mean_intensity"])?;
    let mut curves: Vec<Curve> = Vec::new();
    let mut rows = 0;
    for record in &with_rows {
        let id = record.run_id().unwrap_or("run");
        let label = record_label(record);
        let mut by_receiver: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for (channel, row) in record.eval_rows() {
            csv.write_record([
                id,
                channel,
                &sig6(row.snr_db),
                &row.receiver,
                &sig6(row.ssim),
                &sig6(row.psnr_db),
                &sig6(row.mean_intensity),
            ])?;
            rows += 1;
            by_receiver.entry(&row.receiver).or_default().push((row.snr_db, row.ssim));
        }
        for (rx, mut points) in by_receiver {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            curves.push(Curve {
                label: format!("{label} {rx}"),
                points,
            });
        }
    }
    csv.flush().map_err(|e| HarnessError::io(&table, e))?;

    let figure = out_dir.join("ssim_vs_snr.svg");
    draw_curves(&figure, &curves).map_err(|e| HarnessError::Plot(e.to_string()))?;
    Ok(PlotOutputs {
        table,
        figure,
        curves: curves.len(),
        rows,
    })
}

fn draw_curves(path: &Path, curves: &[Curve]) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let xs = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let root = SVGBackend::new(path, (800, 520)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("SSIM vs. SNR", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(lo..hi, 0.0..1.0)?;
    chart
        .configure_mesh()
        .x_desc("Bob SNR (dB)")
        .y_desc("SSIM")
        .draw()?;
    for (i, curve) in curves.iter().enumerate() {
        let colour = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(curve.points.iter().copied(), colour.stroke_width(2)))?
            .label(curve.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], colour.stroke_width(2)));
        chart.draw_series(curve.points.iter().map(|&p| Circle::new(p, 3, colour.filled())))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()?;
    root.present()?;
    Ok(())
}

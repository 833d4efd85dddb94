//! Procedural stand-in corpus in the Linnaeus directory layout, for runs
//! where the real images are not available.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::Rng;
use semcom_core::data::{ClassLabel, SplitKind};
use semcom_core::rng::{stream, StreamRng};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub size: u32,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            size: 128,
            train_per_class: 1200,
            test_per_class: 400,
            seed: 0,
        }
    }
}

fn colour(rng: &mut StreamRng) -> [f64; 3] {
    [rng.random(), rng.random(), rng.random()]
}

struct Blob {
    cx: f64,
    cy: f64,
    radius: f64,
    colour: [f64; 3],
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Zero-mean fractal value noise, amplitude halving per octave.
fn texture(size: usize, rng: &mut StreamRng) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    for octave in 0..4 {
        let cells = 4usize << octave;
        let amp = 1.0 / f64::from(1u32 << octave);
        let lattice: Vec<f64> = (0..(cells + 1) * (cells + 1))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let at = |i: usize, j: usize| lattice[i * (cells + 1) + j];
        for y in 0..size {
            let fy = (y as f64 + 0.5) / size as f64 * cells as f64;
            let (iy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
            for x in 0..size {
                let fx = (x as f64 + 0.5) / size as f64 * cells as f64;
                let (ix, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
                let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
                let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
                out[y * size + x] += amp * (top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v -= mean);
    out
}

/// One image: a two-colour linear gradient with fractal texture, hard-edged
/// blobs whose count and size depend on the class, and a class-specific
/// overlay.
pub fn render(label: ClassLabel, size: u32, rng: &mut StreamRng) -> RgbImage {
    let (a, b) = (colour(rng), colour(rng));
    let angle: f64 = rng.random::<f64>() * 2.0 * PI;
    let (dx, dy) = (angle.cos(), angle.sin());
    let (count, r_lo, r_hi) = match label {
        ClassLabel::Berry => (9, 0.05, 0.1),
        ClassLabel::Bird => (1, 0.15, 0.25),
        ClassLabel::Dog => (3, 0.2, 0.35),
        ClassLabel::Flower => (1, 0.25, 0.35),
        ClassLabel::Other => (4, 0.1, 0.2),
    };
    let blobs: Vec<Blob> = (0..count)
        .map(|_| Blob {
            cx: rng.random_range(0.15..0.85),
            cy: rng.random_range(0.15..0.85),
            radius: rng.random_range(r_lo..r_hi),
            colour: colour(rng),
        })
        .collect();
    let petals = f64::from(rng.random_range(4..8u32));
    let stripe_freq = rng.random_range(3.0..7.0);
    let stripe_colour = colour(rng);
    let grain_amp = rng.random_range(0.2..0.35);
    let grain = texture(size as usize, rng);

    let s = f64::from(size);
    let edge = 0.75 / s;
    RgbImage::from_fn(size, size, |x, y| {
        let (u, v) = ((f64::from(x) + 0.5) / s, (f64::from(y) + 0.5) / s);
        let t = (((u - 0.5) * dx + (v - 0.5) * dy) / 1.42 + 0.5).clamp(0.0, 1.0);
        let g = grain_amp * grain[(y * size + x) as usize];
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = a[c] * (1.0 - t) + b[c] * t + g;
        }
        for blob in &blobs {
            let d = ((u - blob.cx).powi(2) + (v - blob.cy).powi(2)).sqrt();
            let mut r = blob.radius;
            if label == ClassLabel::Flower {
                let theta = (v - blob.cy).atan2(u - blob.cx);
                r *= 0.65 + 0.35 * (petals * theta).cos();
            }
            let w = 1.0 / (1.0 + ((d - r) / edge).exp());
            let shade = 1.0 - 0.4 * (d / r).min(1.0);
            for c in 0..3 {
                px[c] = px[c] * (1.0 - w) + (blob.colour[c] * shade + 0.5 * g) * w;
            }
        }
        if label == ClassLabel::Other {
            let w = 0.35 * (0.5 + 0.5 * (2.0 * PI * stripe_freq * (u * dy - v * dx)).sin());
            for c in 0..3 {
                px[c] = px[c] * (1.0 - w) + stripe_colour[c] * w;
            }
        }
        Rgb(px.map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8))
    })
}

/// Writes `<root>/{train,test}/<class>/<index>.png`. Images depend only on
/// `(seed, split, class, index)`.
pub fn generate_corpus(root: &Path, spec: &SynthSpec) -> Result<usize> {
    let mut written = 0;
    for (kind, n) in [
        (SplitKind::Train, spec.train_per_class),
        (SplitKind::Test, spec.test_per_class),
    ] {
        for label in ClassLabel::ALL {
            let dir = root.join(kind.dir_name()).join(label.dir_name());
            fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
            let tag = format!("synth/{}/{}", kind.dir_name(), label.dir_name());
            for i in 0..n {
                let mut rng = stream(spec.seed, &tag, i as u64);
                let path = dir.join(format!("{i:05}.png"));
                render(label, spec.size, &mut rng)
                    .save(&path)
                    .map_err(|e| HarnessError::Write {
                        path: path.clone(),
                        reason: e.to_string(),
                    })?;
                written += 1;
            }
        }
    }
    Ok(written)
}

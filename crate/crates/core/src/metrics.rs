//! Reconstruction quality and leakage metrics.
//!
//! SSIM uses `c1 = (0.01 L)²`, `c2 = (0.03 L)²` with dynamic range `L = 1`.
//! Colour images are scored per channel and averaged uniformly.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, log10};
use crate::tensor::{Image, Tensor};
use crate::{Error, Result};

pub const SSIM_C1: f64 = 1e-4;
pub const SSIM_C2: f64 = 9e-4;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
/// Reported PSNR for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

fn check(a: &Image, b: &Image) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::shape(a.dims(), b.dims()));
    }
    Ok(())
}

fn ssim_from_moments(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    ((2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2))
}

/// SSIM from image-wide statistics of each channel (population moments),
/// averaged over channels.
pub fn ssim_global(a: &Image, b: &Image) -> Result<f64> {
    check(a, b)?;
    let mut total = 0.0;
    for c in 0..a.channels() {
        let (pa, pb) = (a.plane(c), b.plane(c));
        let n = pa.len() as f64;
        let mu_a = pa.iter().sum::<f64>() / n;
        let mu_b = pb.iter().sum::<f64>() / n;
        let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
        for (x, y) in pa.iter().zip(pb) {
            let (dx, dy) = (x - mu_a, y - mu_b);
            va += dx * dx;
            vb += dy * dy;
            cov += dx * dy;
        }
        total += ssim_from_moments(mu_a, mu_b, va / n, vb / n, cov / n);
    }
    Ok(total / a.channels() as f64)
}

/// Normalized 1-D Gaussian taps for the SSIM window.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let mid = (size as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - mid;
            exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable "valid" Gaussian filtering of one plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ho, wo) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * wo];
    for y in 0..h {
        let line = &plane[y * w..(y + 1) * w];
        for x in 0..wo {
            rows[y * wo + x] = taps.iter().zip(&line[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ho * wo];
    for y in 0..ho {
        for x in 0..wo {
            out[y * wo + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * rows[(y + i) * wo + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all 11×11 Gaussian-weighted (σ = 1.5) windows lying fully
/// inside the image, per channel, averaged. Falls back to [`ssim_global`]
/// for images smaller than the window.
pub fn ssim_windowed(a: &Image, b: &Image) -> Result<f64> {
    check(a, b)?;
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        log::warn!("image {h}x{w} is smaller than the SSIM window; using global SSIM");
        return ssim_global(a, b);
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let mut total = 0.0;
    for c in 0..a.channels() {
        let (pa, pb) = (a.plane(c), b.plane(c));
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(pa, h, w, &taps);
        let mu_b = filter_valid(pb, h, w, &taps);
        let e_aa = filter_valid(&aa, h, w, &taps);
        let e_bb = filter_valid(&bb, h, w, &taps);
        let e_ab = filter_valid(&ab, h, w, &taps);
        let n = mu_a.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            acc += ssim_from_moments(
                ma,
                mb,
                e_aa[i] - ma * ma,
                e_bb[i] - mb * mb,
                e_ab[i] - ma * mb,
            );
        }
        total += acc / n as f64;
    }
    Ok(total / a.channels() as f64)
}

fn image_mse(a: &Image, b: &Image) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64
}

/// `10 log10(1 / mse)` for unit peak, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check(a, b)?;
    Ok(psnr_from_mse(image_mse(a, b)))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * log10(1.0 / mse)).min(PSNR_CAP_DB)
}

/// `(mean intensity, d(0, ŝ))` for one reconstruction.
pub fn blackness(s_hat: &Image) -> (f64, f64) {
    let n = s_hat.data().len() as f64;
    let mean = s_hat.data().iter().sum::<f64>() / n;
    let sq = s_hat.data().iter().map(|v| v * v).sum::<f64>() / n;
    (mean, sq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageScores {
    pub ssim: f64,
    pub psnr_db: f64,
    pub mean_intensity: f64,
}

/// Batch-averaged scores with the per-image breakdown.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub ssim: f64,
    pub psnr_db: f64,
    pub mean_intensity: f64,
    pub per_image: Vec<ImageScores>,
}

impl MetricReport {
    /// Scores every pair in the batch using windowed SSIM.
    pub fn from_batch(originals: &Tensor, reconstructions: &Tensor) -> Result<Self> {
        if originals.shape() != reconstructions.shape() {
            return Err(Error::shape(originals.shape(), reconstructions.shape()));
        }
        let mut per_image = Vec::with_capacity(originals.batch());
        for i in 0..originals.batch() {
            let (a, b) = (originals.image(i), reconstructions.image(i));
            per_image.push(ImageScores {
                ssim: ssim_windowed(&a, &b)?,
                psnr_db: psnr(&a, &b)?,
                mean_intensity: b.mean_intensity(),
            });
        }
        Ok(Self::from_scores(per_image))
    }

    pub fn from_scores(per_image: Vec<ImageScores>) -> Self {
        let n = per_image.len().max(1) as f64;
        MetricReport {
            ssim: per_image.iter().map(|s| s.ssim).sum::<f64>() / n,
            psnr_db: per_image.iter().map(|s| s.psnr_db).sum::<f64>() / n,
            mean_intensity: per_image.iter().map(|s| s.mean_intensity).sum::<f64>() / n,
            per_image,
        }
    }
}

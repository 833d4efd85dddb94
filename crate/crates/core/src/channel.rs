//! Simulated legitimate (Bob) and wiretap (Eve) channels.
//!
//! AWGN: `y_b = x + n_b`, `y_e = x + n_e` with `σ_e² = P σ_b²`.
//!
//! MISO with maximum ratio transmission: the precoder `v = h_b / ‖h_b‖²`
//! makes Bob's effective gain exactly one, so `y_b = x + n_b`, while Eve
//! sees `y_e = α_e x + n_e` with `α_e = h_eᴴ h_b / ‖h_b‖²`. The real latent is
//! paired into complex symbols `(x_{2k}, x_{2k+1})` for Eve's path only.
//!
//! Noise never carries gradient: the adjoint of each path w.r.t. `x` is the
//! identity (AWGN, Bob) or multiplication by `conj(α_e)` (MISO Eve).

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::LatentCode;
use crate::math::{powf, sqrt};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Receivers observe `x` exactly; used for pretraining.
    Noiseless,
    Awgn,
    MisoMrt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// Transmit SNR at Bob, `10 log10(p / σ_b²)`.
    pub snr_bob_db: f64,
    /// `P = σ_e² / σ_b²` in dB.
    pub eve_noise_ratio_db: f64,
    /// Transmit antennas `N` (MISO only).
    pub antennas: usize,
    pub noise_seed: u64,
}

impl ChannelConfig {
    /// AWGN wiretap setting with a 15 dB worse eavesdropper.
    pub fn awgn(snr_bob_db: f64) -> Self {
        ChannelConfig {
            kind: ChannelKind::Awgn,
            snr_bob_db,
            eve_noise_ratio_db: 15.0,
            antennas: 1,
            noise_seed: 0,
        }
    }

    /// MISO-MRT setting with eight antennas and equal noise powers.
    pub fn miso(snr_bob_db: f64) -> Self {
        ChannelConfig {
            kind: ChannelKind::MisoMrt,
            snr_bob_db,
            eve_noise_ratio_db: 0.0,
            antennas: 8,
            noise_seed: 0,
        }
    }

    pub fn noiseless() -> Self {
        ChannelConfig {
            kind: ChannelKind::Noiseless,
            snr_bob_db: f64::INFINITY,
            eve_noise_ratio_db: 0.0,
            antennas: 1,
            noise_seed: 0,
        }
    }

    pub fn with_seed(mut self, noise_seed: u64) -> Self {
        self.noise_seed = noise_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_bob_db.is_nan() || !self.eve_noise_ratio_db.is_finite() {
            return Err(Error::Config("channel SNR values must be numbers".into()));
        }
        if self.kind == ChannelKind::MisoMrt && self.antennas == 0 {
            return Err(Error::Config("MISO channel needs at least one antenna".into()));
        }
        Ok(())
    }

    /// `σ_b²` for per-symbol power `p`.
    pub fn bob_noise_power(&self, p: f64) -> f64 {
        match self.kind {
            ChannelKind::Noiseless => 0.0,
            _ => snr_to_noise_power(self.snr_bob_db, p),
        }
    }

    /// `σ_e² = P σ_b²`.
    pub fn eve_noise_power(&self, p: f64) -> f64 {
        match self.kind {
            ChannelKind::Noiseless => 0.0,
            _ => self.bob_noise_power(p) * powf(10.0, self.eve_noise_ratio_db / 10.0),
        }
    }

    /// Eve's SNR in dB under this configuration.
    pub fn snr_eve_db(&self) -> f64 {
        self.snr_bob_db - self.eve_noise_ratio_db
    }
}

/// `σ² = p / 10^(snr_db / 10)`; an infinite SNR gives zero noise.
pub fn snr_to_noise_power(snr_db: f64, p: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    p / powf(10.0, snr_db / 10.0)
}

/// Returns `x + n` with `n ~ N(0, σ² I)` drawn from `rng`.
pub fn add_awgn<R: Rng + ?Sized>(x: &Tensor, noise_power: f64, rng: &mut R) -> Tensor {
    let mut y = x.clone();
    if noise_power > 0.0 {
        let sigma = sqrt(noise_power);
        for v in y.data_mut() {
            let n: f64 = StandardNormal.sample(rng);
            *v += sigma * n;
        }
    }
    y
}

/// AWGN legitimate and wiretap outputs from independent noise streams.
pub fn awgn_pair<R: Rng + ?Sized>(
    x: &LatentCode,
    config: &ChannelConfig,
    bob_rng: &mut R,
    eve_rng: &mut R,
) -> (Tensor, Tensor) {
    let p = x.power_budget();
    (
        add_awgn(x.values(), config.bob_noise_power(p), bob_rng),
        add_awgn(x.values(), config.eve_noise_power(p), eve_rng),
    )
}

/// Channel vectors for one MISO transmission and Eve's resulting gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_b: Vec<Complex64>,
    pub h_e: Vec<Complex64>,
    pub alpha_e: Complex64,
}

impl ChannelRealization {
    pub fn from_channels(h_b: Vec<Complex64>, h_e: Vec<Complex64>) -> Result<Self> {
        if h_b.len() != h_e.len() {
            return Err(Error::shape(h_b.len(), h_e.len()));
        }
        let v = mrt_precoder(&h_b)?;
        let alpha_e = inner(&h_e, &v);
        Ok(ChannelRealization { h_b, h_e, alpha_e })
    }

    /// Bob's effective gain `h_bᴴ v` after MRT precoding (one, up to rounding).
    pub fn bob_gain(&self) -> Complex64 {
        let v = mrt_precoder(&self.h_b).expect("realization holds a nonzero h_b");
        inner(&self.h_b, &v)
    }
}

/// `aᴴ b`.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Maximum ratio transmission precoder `v = h_b / ‖h_b‖²`.
pub fn mrt_precoder(h_b: &[Complex64]) -> Result<Vec<Complex64>> {
    let energy: f64 = h_b.iter().map(|h| h.norm_sqr()).sum();
    if energy == 0.0 || h_b.is_empty() {
        return Err(Error::ZeroChannel);
    }
    Ok(h_b.iter().map(|h| h / energy).collect())
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Draws `h_b`, `h_e` i.i.d. `CN(0, I_N)` (Rayleigh fading).
pub fn sample_miso_realization<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ChannelRealization> {
    if n == 0 {
        return Err(Error::Config("MISO channel needs at least one antenna".into()));
    }
    loop {
        let h_b: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let h_e: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        match ChannelRealization::from_channels(h_b, h_e) {
            Ok(r) => return Ok(r),
            // probability zero, but never hand out a degenerate precoder
            Err(Error::ZeroChannel) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn check_even(x: &Tensor) -> Result<()> {
    if x.item_len() % 2 != 0 {
        return Err(Error::OddLatent(x.item_len()));
    }
    Ok(())
}

/// Multiplies every complex pair `(t_{2k}, t_{2k+1})` by `gain`.
pub fn complex_scale(t: &Tensor, gain: Complex64) -> Result<Tensor> {
    check_even(t)?;
    let mut out = t.clone();
    for pair in out.data_mut().chunks_exact_mut(2) {
        let z = Complex64::new(pair[0], pair[1]) * gain;
        pair[0] = z.re;
        pair[1] = z.im;
    }
    Ok(out)
}

/// Eve's MISO observation `α_e x + n_e` with per-real-component noise
/// variance `σ_e²`.
pub fn miso_wiretap<R: Rng + ?Sized>(
    x: &LatentCode,
    realization: &ChannelRealization,
    config: &ChannelConfig,
    eve_rng: &mut R,
) -> Result<Tensor> {
    let faded = complex_scale(x.values(), realization.alpha_e)?;
    Ok(add_awgn(&faded, config.eve_noise_power(x.power_budget()), eve_rng))
}

/// MISO-MRT legitimate and wiretap outputs.
pub fn miso_pair<R: Rng + ?Sized>(
    x: &LatentCode,
    realization: &ChannelRealization,
    config: &ChannelConfig,
    bob_rng: &mut R,
    eve_rng: &mut R,
) -> Result<(Tensor, Tensor)> {
    check_even(x.values())?;
    let y_b = add_awgn(x.values(), config.bob_noise_power(x.power_budget()), bob_rng);
    let y_e = miso_wiretap(x, realization, config, eve_rng)?;
    Ok((y_b, y_e))
}

/// Bob's received batch for any channel kind.
pub fn legitimate_output<R: Rng + ?Sized>(
    x: &LatentCode,
    config: &ChannelConfig,
    bob_rng: &mut R,
) -> Tensor {
    add_awgn(x.values(), config.bob_noise_power(x.power_budget()), bob_rng)
}

/// Eve's received batch for any channel kind; MISO needs a realization.
pub fn wiretap_output<R: Rng + ?Sized>(
    x: &LatentCode,
    config: &ChannelConfig,
    realization: Option<&ChannelRealization>,
    eve_rng: &mut R,
) -> Result<Tensor> {
    match config.kind {
        ChannelKind::Noiseless => Ok(x.values().clone()),
        ChannelKind::Awgn => Ok(add_awgn(
            x.values(),
            config.eve_noise_power(x.power_budget()),
            eve_rng,
        )),
        ChannelKind::MisoMrt => {
            let r = realization
                .ok_or_else(|| Error::Config("MISO wiretap needs a channel realization".into()))?;
            miso_wiretap(x, r, config, eve_rng)
        }
    }
}

/// Gradient w.r.t. `x` of a loss with gradient `grad_y_e` w.r.t. Eve's output.
pub fn wiretap_adjoint(
    grad_y_e: &Tensor,
    config: &ChannelConfig,
    realization: Option<&ChannelRealization>,
) -> Result<Tensor> {
    match (config.kind, realization) {
        (ChannelKind::MisoMrt, Some(r)) => complex_scale(grad_y_e, r.alpha_e.conj()),
        (ChannelKind::MisoMrt, None) => Err(Error::Config(
            "MISO wiretap needs a channel realization".into(),
        )),
        _ => Ok(grad_y_e.clone()),
    }
}

//! The joint source-channel encoder/decoder pair and the transmit-power
//! normalization layer.
//!
//! Encoder: `[residual block → stride-2 conv → GDN] × stages → projection conv`
//! to `latent_channels` maps. Decoder: `head conv → [sub-pixel conv → IGDN →
//! residual block] × stages → output conv → sigmoid`.

use alloc::format;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::math::sqrt;
use crate::nn::{Conv2d, Gdn, GdnDirection, Layer, ResBlock, Stack, Tape};
use crate::params::ParamSet;
use crate::rng::stream;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Added inside the square root of the latent norm so the normalization
/// stays differentiable near zero.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    pub num_filters: usize,
    pub latent_channels: usize,
    pub downsample_stages: usize,
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
}

impl Default for CodecConfig {
    /// 128 filters, three halvings, 8 latent channels on 128×128×3 input.
    fn default() -> Self {
        CodecConfig {
            num_filters: 128,
            latent_channels: 8,
            downsample_stages: 3,
            input_channels: 3,
            input_height: 128,
            input_width: 128,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("num_filters", self.num_filters),
            ("latent_channels", self.latent_channels),
            ("input_channels", self.input_channels),
            ("input_height", self.input_height),
            ("input_width", self.input_width),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.downsample_stages > 16 {
            return Err(Error::Config("downsample_stages is unreasonably large".into()));
        }
        let f = 1usize << self.downsample_stages;
        if self.input_height % f != 0 || self.input_width % f != 0 {
            return Err(Error::Config(format!(
                "input {}x{} is not divisible by 2^{}",
                self.input_height, self.input_width, self.downsample_stages
            )));
        }
        Ok(())
    }

    /// `(channels, height, width)` of one latent map.
    pub fn latent_shape(&self) -> (usize, usize, usize) {
        let f = 1usize << self.downsample_stages;
        (
            self.latent_channels,
            self.input_height / f,
            self.input_width / f,
        )
    }

    /// Number of real channel symbols `M` per image.
    pub fn latent_dim(&self) -> usize {
        let (c, h, w) = self.latent_shape();
        c * h * w
    }

    pub fn image_shape(&self) -> (usize, usize, usize) {
        (self.input_channels, self.input_height, self.input_width)
    }

    /// Transmitted symbols per source dimension.
    pub fn bandwidth_ratio(&self) -> f64 {
        self.latent_dim() as f64
            / (self.input_channels * self.input_height * self.input_width) as f64
    }
}

#[derive(Debug, Clone)]
pub struct Encoder {
    config: CodecConfig,
    stack: Stack,
    params: ParamSet,
}

#[derive(Debug)]
pub struct Decoder {
    config: CodecConfig,
    stack: Stack,
    params: ParamSet,
    calls: AtomicUsize,
}

impl Clone for Decoder {
    fn clone(&self) -> Self {
        Decoder {
            config: self.config,
            stack: self.stack.clone(),
            params: self.params.clone(),
            calls: AtomicUsize::new(0),
        }
    }
}

/// Builds both halves with parameters drawn deterministically from `init_seed`.
pub fn build_codec(config: &CodecConfig, init_seed: u64) -> Result<(Encoder, Decoder)> {
    config.validate()?;
    let f = config.num_filters;
    let mut rng = stream(init_seed, "codec-init", 0);

    let mut params = ParamSet::new();
    let mut stack = Stack::new();
    let mut ch = config.input_channels;
    for s in 0..config.downsample_stages {
        let res = ResBlock::register(&mut params, &format!("enc.stage{s}.res"), ch, f);
        res.init(&mut params, &mut rng);
        let down = Conv2d::register(&mut params, &format!("enc.stage{s}.down"), f, f, 3, 2);
        down.init(&mut params, &mut rng, 1.0);
        let gdn = Gdn::register(&mut params, &format!("enc.stage{s}.gdn"), f, GdnDirection::Forward);
        gdn.init(&mut params);
        stack.push(Layer::Res(res));
        stack.push(Layer::Conv(down));
        stack.push(Layer::Gdn(gdn));
        ch = f;
    }
    let proj = Conv2d::register(&mut params, "enc.project", ch, config.latent_channels, 3, 1);
    proj.init(&mut params, &mut rng, 1.0);
    stack.push(Layer::Conv(proj));
    let encoder = Encoder {
        config: *config,
        stack,
        params,
    };

    let mut params = ParamSet::new();
    let mut stack = Stack::new();
    let head = Conv2d::register(&mut params, "dec.head", config.latent_channels, f, 3, 1);
    head.init(&mut params, &mut rng, 1.0);
    stack.push(Layer::Conv(head));
    for s in 0..config.downsample_stages {
        let up = Conv2d::register(&mut params, &format!("dec.stage{s}.subpixel"), f, 4 * f, 3, 1);
        up.init(&mut params, &mut rng, 1.0);
        let igdn = Gdn::register(&mut params, &format!("dec.stage{s}.igdn"), f, GdnDirection::Inverse);
        igdn.init(&mut params);
        let res = ResBlock::register(&mut params, &format!("dec.stage{s}.res"), f, f);
        res.init(&mut params, &mut rng);
        stack.push(Layer::Conv(up));
        stack.push(Layer::PixelShuffle(2));
        stack.push(Layer::Gdn(igdn));
        stack.push(Layer::Res(res));
    }
    let out = Conv2d::register(&mut params, "dec.output", f, config.input_channels, 3, 1);
    out.init(&mut params, &mut rng, 1.0);
    stack.push(Layer::Conv(out));
    stack.push(Layer::Sigmoid);
    let decoder = Decoder {
        config: *config,
        stack,
        params,
        calls: AtomicUsize::new(0),
    };
    Ok((encoder, decoder))
}

fn check_images(config: &CodecConfig, x: &Tensor) -> Result<()> {
    let (c, h, w) = config.image_shape();
    if x.shape()[1..] != [c, h, w] {
        return Err(Error::shape([c, h, w], &x.shape()[1..]));
    }
    Ok(())
}

impl Encoder {
    pub fn config(&self) -> &CodecConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Pre-normalization latent batch `[B, C_z, H/2^s, W/2^s]` (`M` values per item).
    pub fn encode(&self, images: &Tensor) -> Result<Tensor> {
        check_images(&self.config, images)?;
        Ok(self.stack.forward(&self.params, images))
    }

    pub fn encode_with_params(&self, params: &ParamSet, images: &Tensor) -> Result<Tensor> {
        check_images(&self.config, images)?;
        Ok(self.stack.forward(params, images))
    }

    pub fn encode_tape(&self, images: &Tensor) -> Result<(Tensor, Tape)> {
        check_images(&self.config, images)?;
        Ok(self.stack.forward_tape(&self.params, images))
    }

    /// Accumulates parameter gradients; returns the gradient w.r.t. the images.
    pub fn backward(&self, tape: &Tape, grad_latent: &Tensor, grads: &mut ParamSet) -> Tensor {
        self.stack.backward(&self.params, tape, grad_latent, grads)
    }
}

impl Decoder {
    pub fn config(&self) -> &CodecConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Number of forward passes run since construction.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn latent_view(&self, y: &Tensor) -> Result<Tensor> {
        let m = self.config.latent_dim();
        if y.item_len() != m {
            return Err(Error::shape(m, y.item_len()));
        }
        let (c, h, w) = self.config.latent_shape();
        y.clone().reshape([y.batch(), c, h, w])
    }

    /// Maps a received batch (`M` values per item, any 4-d layout) to images in `[0, 1]`.
    pub fn decode(&self, y: &Tensor) -> Result<Tensor> {
        self.decode_with_params(&self.params, y)
    }

    pub fn decode_with_params(&self, params: &ParamSet, y: &Tensor) -> Result<Tensor> {
        let y = self.latent_view(y)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.stack.forward(params, &y))
    }

    pub fn decode_tape(&self, y: &Tensor) -> Result<(Tensor, Tape)> {
        let y = self.latent_view(y)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.stack.forward_tape(&self.params, &y))
    }

    /// Accumulates parameter gradients; returns the gradient w.r.t. the
    /// received latent in `[B, C_z, h, w]` layout.
    pub fn backward(&self, tape: &Tape, grad_images: &Tensor, grads: &mut ParamSet) -> Tensor {
        self.stack.backward(&self.params, tape, grad_images, grads)
    }
}

/// A batch of power-normalized channel inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    values: Tensor,
    power_budget: f64,
}

impl LatentCode {
    /// Wraps symbols that are already normalized (e.g. test fixtures).
    pub fn from_normalized(values: Tensor, power_budget: f64) -> Self {
        LatentCode {
            values,
            power_budget,
        }
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn into_values(self) -> Tensor {
        self.values
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    /// `M`, the number of real symbols per item.
    pub fn dim(&self) -> usize {
        self.values.item_len()
    }

    /// `(1/M) ‖x_i‖²` for item `i`.
    pub fn average_power(&self, i: usize) -> f64 {
        let x = self.values.item(i);
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// Scales every item to `x = sqrt(M p) · z / ‖z‖₂`, so `(1/M)‖x‖² = p`.
pub fn power_normalize(z: &Tensor, p: f64) -> Result<LatentCode> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Config(format!("power budget must be positive, got {p}")));
    }
    let m = z.item_len();
    let gain = sqrt(m as f64 * p);
    let mut x = z.clone();
    for i in 0..z.batch() {
        let item = x.item_mut(i);
        let energy: f64 = item.iter().map(|v| v * v).sum();
        if energy == 0.0 {
            return Err(Error::ZeroPowerLatent { item: i });
        }
        let scale = gain / sqrt(energy + NORM_FLOOR);
        item.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(LatentCode {
        values: x,
        power_budget: p,
    })
}

/// Gradient w.r.t. `z` of a loss whose gradient w.r.t. `power_normalize(z, p)` is `grad_x`.
pub fn power_normalize_backward(z: &Tensor, grad_x: &Tensor, p: f64) -> Tensor {
    let m = z.item_len();
    let gain = sqrt(m as f64 * p);
    let mut dz = Tensor::zeros(z.shape());
    for i in 0..z.batch() {
        let zi = z.item(i);
        let gi = grad_x.item(i);
        let r2 = zi.iter().map(|v| v * v).sum::<f64>() + NORM_FLOOR;
        let r = sqrt(r2);
        let proj: f64 = zi.iter().zip(gi).map(|(a, b)| a * b).sum::<f64>() / r2;
        for ((d, zv), gv) in dz.item_mut(i).iter_mut().zip(zi).zip(gi) {
            *d = gain / r * (gv - zv * proj);
        }
    }
    dz
}

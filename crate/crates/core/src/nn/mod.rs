//! Layers with explicit forward/backward passes.
//!
//! Parameters never live inside layers: a layer stores indices into a
//! [`ParamSet`], so the same architecture can be evaluated against any
//! compatible parameter set and gradients accumulate into a mirrored set.

mod conv;
mod gdn;
#[cfg(test)]
pub(crate) mod testutil;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

pub use conv::Conv2d;
pub use gdn::{gdn, gdn_backward, gdn_exact_inverse, Gdn, GdnDirection, BETA_FLOOR};

use crate::math::exp;
use crate::params::ParamSet;
use crate::tensor::Tensor;

// ELU with unit scale: continuously differentiable, so finite-difference
// gradient checks hold at every input.
fn elu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = exp(*v) - 1.0;
        }
    });
    y
}

fn elu_backward_in_place(grad: &mut Tensor, pre: &Tensor) {
    for (g, p) in grad.data_mut().iter_mut().zip(pre.data()) {
        if *p < 0.0 {
            *g *= exp(*p);
        }
    }
}

/// Rearranges `[N, C·r², H, W]` into `[N, C, H·r, W·r]`; input channel
/// `c·r² + i·r + j` lands at sub-pixel offset `(i, j)` of output channel `c`.
pub fn pixel_shuffle(x: &Tensor, r: usize) -> Tensor {
    let [n, cr, h, w] = x.shape();
    assert_eq!(cr % (r * r), 0, "pixel shuffle channels");
    let c = cr / (r * r);
    let mut y = Tensor::zeros([n, c, h * r, w * r]);
    for b in 0..n {
        let src = x.item(b);
        let dst = y.item_mut(b);
        for ch in 0..c {
            for i in 0..r {
                for j in 0..r {
                    let plane = &src[((ch * r + i) * r + j) * h * w..][..h * w];
                    for yy in 0..h {
                        for xx in 0..w {
                            dst[(ch * h * r + yy * r + i) * w * r + xx * r + j] = plane[yy * w + xx];
                        }
                    }
                }
            }
        }
    }
    y
}

/// Adjoint (and inverse) of [`pixel_shuffle`].
pub fn pixel_unshuffle(y: &Tensor, r: usize) -> Tensor {
    let [n, c, hr, wr] = y.shape();
    let (h, w) = (hr / r, wr / r);
    let mut x = Tensor::zeros([n, c * r * r, h, w]);
    for b in 0..n {
        let src = y.item(b);
        let dst = x.item_mut(b);
        for ch in 0..c {
            for i in 0..r {
                for j in 0..r {
                    let plane = &mut dst[((ch * r + i) * r + j) * h * w..][..h * w];
                    for yy in 0..h {
                        for xx in 0..w {
                            plane[yy * w + xx] = src[(ch * hr + yy * r + i) * wr + xx * r + j];
                        }
                    }
                }
            }
        }
    }
    x
}

/// Pre-activation residual block: `x + conv2(elu(conv1(elu(x))))`, with a
/// 1×1 projection on the skip path when the channel count changes.
#[derive(Debug, Clone)]
pub struct ResBlock {
    conv1: Conv2d,
    conv2: Conv2d,
    shortcut: Option<Conv2d>,
}

impl ResBlock {
    pub fn register(params: &mut ParamSet, name: &str, in_ch: usize, out_ch: usize) -> Self {
        let conv1 = Conv2d::register(params, &format!("{name}.conv1"), in_ch, out_ch, 3, 1);
        let conv2 = Conv2d::register(params, &format!("{name}.conv2"), out_ch, out_ch, 3, 1);
        let shortcut = (in_ch != out_ch)
            .then(|| Conv2d::register(params, &format!("{name}.skip"), in_ch, out_ch, 1, 1));
        ResBlock {
            conv1,
            conv2,
            shortcut,
        }
    }

    pub fn init<R: Rng>(&self, params: &mut ParamSet, rng: &mut R) {
        self.conv1.init(params, rng, core::f64::consts::SQRT_2);
        // small residual branch so deep stacks start near the identity
        self.conv2.init(params, rng, 0.5);
        if let Some(s) = &self.shortcut {
            s.init(params, rng, 1.0);
        }
    }

    fn forward_parts(&self, params: &ParamSet, x: &Tensor) -> (Tensor, Tensor) {
        let h1 = self.conv1.forward(params, &elu(x));
        let mut out = self.conv2.forward(params, &elu(&h1));
        match &self.shortcut {
            Some(s) => out.add_assign(&s.forward(params, x)),
            None => out.add_assign(x),
        }
        (out, h1)
    }

    pub fn forward(&self, params: &ParamSet, x: &Tensor) -> Tensor {
        self.forward_parts(params, x).0
    }

    fn backward(
        &self,
        params: &ParamSet,
        x: &Tensor,
        h1: &Tensor,
        grad_out: &Tensor,
        grads: &mut ParamSet,
    ) -> Tensor {
        let mut d_h1 = self.conv2.backward(params, &elu(h1), grad_out, grads);
        elu_backward_in_place(&mut d_h1, h1);
        let mut dx = self.conv1.backward(params, &elu(x), &d_h1, grads);
        elu_backward_in_place(&mut dx, x);
        match &self.shortcut {
            Some(s) => dx.add_assign(&s.backward(params, x, grad_out, grads)),
            None => dx.add_assign(grad_out),
        }
        dx
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv(Conv2d),
    Gdn(Gdn),
    Res(ResBlock),
    PixelShuffle(usize),
    Sigmoid,
}

/// What a layer keeps from its forward pass for the backward pass.
#[derive(Debug, Clone)]
enum Saved {
    Input(Tensor),
    Res { x: Tensor, h1: Tensor },
    Output(Tensor),
    Nothing,
}

/// Activations recorded by [`Stack::forward_tape`].
#[derive(Debug, Clone)]
pub struct Tape {
    saved: Vec<Saved>,
}

/// A sequential chain of layers.
#[derive(Debug, Clone, Default)]
pub struct Stack {
    layers: Vec<Layer>,
}

impl Stack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn forward(&self, params: &ParamSet, x: &Tensor) -> Tensor {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = match layer {
                Layer::Conv(c) => c.forward(params, &cur),
                Layer::Gdn(g) => g.forward(params, &cur),
                Layer::Res(r) => r.forward(params, &cur),
                Layer::PixelShuffle(s) => pixel_shuffle(&cur, *s),
                Layer::Sigmoid => sigmoid(&cur),
            };
        }
        cur
    }

    pub fn forward_tape(&self, params: &ParamSet, x: &Tensor) -> (Tensor, Tape) {
        let mut saved = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let next = match layer {
                Layer::Conv(c) => c.forward(params, &cur),
                Layer::Gdn(g) => g.forward(params, &cur),
                Layer::Res(r) => {
                    let (out, h1) = r.forward_parts(params, &cur);
                    saved.push(Saved::Res { x: cur, h1 });
                    cur = out;
                    continue;
                }
                Layer::PixelShuffle(s) => {
                    saved.push(Saved::Nothing);
                    cur = pixel_shuffle(&cur, *s);
                    continue;
                }
                Layer::Sigmoid => {
                    let y = sigmoid(&cur);
                    saved.push(Saved::Output(y.clone()));
                    cur = y;
                    continue;
                }
            };
            saved.push(Saved::Input(cur));
            cur = next;
        }
        (cur, Tape { saved })
    }

    /// Back-propagates `grad_out`, accumulating parameter gradients into
    /// `grads`; returns the gradient with respect to the stack input.
    pub fn backward(
        &self,
        params: &ParamSet,
        tape: &Tape,
        grad_out: &Tensor,
        grads: &mut ParamSet,
    ) -> Tensor {
        let mut g = grad_out.clone();
        for (layer, saved) in self.layers.iter().zip(&tape.saved).rev() {
            g = match (layer, saved) {
                (Layer::Conv(c), Saved::Input(x)) => c.backward(params, x, &g, grads),
                (Layer::Gdn(l), Saved::Input(x)) => l.backward(params, x, &g, grads),
                (Layer::Res(r), Saved::Res { x, h1 }) => r.backward(params, x, h1, &g, grads),
                (Layer::PixelShuffle(s), Saved::Nothing) => pixel_unshuffle(&g, *s),
                (Layer::Sigmoid, Saved::Output(y)) => {
                    for (gv, yv) in g.data_mut().iter_mut().zip(y.data()) {
                        *gv *= yv * (1.0 - yv);
                    }
                    g
                }
                _ => unreachable!("tape does not match stack"),
            };
        }
        g
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut()
        .iter_mut()
        .for_each(|v| *v = 1.0 / (1.0 + exp(-*v)));
    y
}

//! Generalized divisive normalization across channels.
//!
//! Forward: `y_i = x_i / sqrt(beta_i + sum_j gamma_ij * x_j^2)`.
//! Inverse (IGDN, used in the decoder): multiply by the same root instead.
//!
//! Trainable storage is reparameterized: `beta = beta_raw^2 + BETA_FLOOR`,
//! `gamma = gamma_raw^2`, so `beta >= BETA_FLOOR > 0` and `gamma >= 0` hold for
//! any raw values the optimizer produces.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{gemm, solve};
use crate::math::sqrt;
use crate::params::{Param, ParamSet};
use crate::tensor::Tensor;

pub const BETA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdnDirection {
    Forward,
    Inverse,
}

/// Per-position normalization pool `beta + gamma · x²`, laid out like one
/// batch item (`[channels, height*width]`) for every item.
fn pool(x: &Tensor, beta: &[f64], gamma: &[f64]) -> Vec<f64> {
    let c = x.channels();
    let hw = x.height() * x.width();
    let mut out = vec![0.0; x.data().len()];
    let mut sq = vec![0.0; c * hw];
    for i in 0..x.batch() {
        for (s, v) in sq.iter_mut().zip(x.item(i)) {
            *s = v * v;
        }
        let dst = &mut out[i * c * hw..(i + 1) * c * hw];
        for (ch, b) in beta.iter().enumerate() {
            dst[ch * hw..(ch + 1) * hw].iter_mut().for_each(|v| *v = *b);
        }
        gemm(c, c, hw, 1.0, gamma, false, &sq, false, 1.0, dst);
    }
    out
}

/// Applies GDN or IGDN with explicit (already positive) `beta` (`[C]`) and
/// `gamma` (`[C, C]`, row `i` weighting the squares feeding channel `i`).
pub fn gdn(x: &Tensor, beta: &[f64], gamma: &[f64], direction: GdnDirection) -> Tensor {
    let c = x.channels();
    assert_eq!(beta.len(), c);
    assert_eq!(gamma.len(), c * c);
    let norm = pool(x, beta, gamma);
    let mut y = x.clone();
    for (v, n) in y.data_mut().iter_mut().zip(&norm) {
        match direction {
            GdnDirection::Forward => *v /= sqrt(*n),
            GdnDirection::Inverse => *v *= sqrt(*n),
        }
    }
    y
}

/// Gradients of a scalar loss through [`gdn`]: returns `(dx, dbeta, dgamma)`.
pub fn gdn_backward(
    x: &Tensor,
    beta: &[f64],
    gamma: &[f64],
    direction: GdnDirection,
    grad_out: &Tensor,
) -> (Tensor, Vec<f64>, Vec<f64>) {
    let c = x.channels();
    let hw = x.height() * x.width();
    let norm = pool(x, beta, gamma);
    let mut dx = Tensor::zeros(x.shape());
    let mut dbeta = vec![0.0; c];
    let mut dgamma = vec![0.0; c * c];
    let mut u = vec![0.0; c * hw];
    let mut sq = vec![0.0; c * hw];
    let mut back = vec![0.0; c * hw];
    for i in 0..x.batch() {
        let xi = x.item(i);
        let gi = grad_out.item(i);
        let ni = &norm[i * c * hw..(i + 1) * c * hw];
        let dxi = dx.item_mut(i);
        for k in 0..c * hw {
            let root = sqrt(ni[k]);
            // u = g * dy/dN, and the direct term g * dy/dx at fixed N
            let (dy_dn, scale) = match direction {
                GdnDirection::Forward => (-0.5 * xi[k] / (ni[k] * root), 1.0 / root),
                GdnDirection::Inverse => (0.5 * xi[k] / root, root),
            };
            u[k] = gi[k] * dy_dn;
            dxi[k] = gi[k] * scale;
            sq[k] = xi[k] * xi[k];
        }
        for ch in 0..c {
            dbeta[ch] += u[ch * hw..(ch + 1) * hw].iter().sum::<f64>();
        }
        gemm(c, hw, c, 1.0, &u, false, &sq, true, 1.0, &mut dgamma);
        gemm(c, c, hw, 1.0, gamma, true, &u, false, 0.0, &mut back);
        for k in 0..c * hw {
            dxi[k] += 2.0 * xi[k] * back[k];
        }
    }
    (dx, dbeta, dgamma)
}

/// Exact inverse of forward GDN.
///
/// With `z = x²`, forward GDN gives `x_i² = y_i² (beta_i + sum_j gamma_ij z_j)`,
/// which is linear in `z`: `(I - diag(y²) gamma) z = y² ⊙ beta`. Solving per
/// position and restoring signs from `y` recovers `x`. Returns `None` if the
/// system is singular at some position (`y` outside the forward map's range).
pub fn gdn_exact_inverse(y: &Tensor, beta: &[f64], gamma: &[f64]) -> Option<Tensor> {
    let c = y.channels();
    let hw = y.height() * y.width();
    let mut x = Tensor::zeros(y.shape());
    let mut a = vec![0.0; c * c];
    let mut rhs = vec![0.0; c];
    for i in 0..y.batch() {
        let yi = y.item(i);
        let xi = x.item_mut(i);
        for pos in 0..hw {
            for r in 0..c {
                let y2 = yi[r * hw + pos] * yi[r * hw + pos];
                for col in 0..c {
                    a[r * c + col] = if r == col { 1.0 } else { 0.0 } - y2 * gamma[r * c + col];
                }
                rhs[r] = y2 * beta[r];
            }
            let z = solve(c, &a, &rhs)?;
            for r in 0..c {
                let mag = sqrt(z[r].max(0.0));
                xi[r * hw + pos] = if yi[r * hw + pos] < 0.0 { -mag } else { mag };
            }
        }
    }
    Some(x)
}

/// GDN layer with reparameterized trainable `beta` and `gamma`.
#[derive(Debug, Clone)]
pub struct Gdn {
    beta_raw: usize,
    gamma_raw: usize,
    channels: usize,
    direction: GdnDirection,
}

impl Gdn {
    pub fn register(
        params: &mut ParamSet,
        name: &str,
        channels: usize,
        direction: GdnDirection,
    ) -> Self {
        let beta_raw = params.push(Param::zeros(format!("{name}.beta_raw"), &[channels]));
        let gamma_raw = params.push(Param::zeros(
            format!("{name}.gamma_raw"),
            &[channels, channels],
        ));
        Gdn {
            beta_raw,
            gamma_raw,
            channels,
            direction,
        }
    }

    /// `beta = 1`, `gamma = 0.1` on the diagonal and `1e-4` elsewhere. Off-
    /// diagonal raw values start nonzero; a squared parameter at exactly zero
    /// would never receive gradient.
    pub fn init(&self, params: &mut ParamSet) {
        let c = self.channels;
        params
            .data_mut(self.beta_raw)
            .iter_mut()
            .for_each(|b| *b = sqrt(1.0 - BETA_FLOOR));
        for (k, g) in params.data_mut(self.gamma_raw).iter_mut().enumerate() {
            *g = if k / c == k % c { sqrt(0.1) } else { 0.01 };
        }
    }

    pub fn beta(&self, params: &ParamSet) -> Vec<f64> {
        params
            .data(self.beta_raw)
            .iter()
            .map(|b| b * b + BETA_FLOOR)
            .collect()
    }

    pub fn gamma(&self, params: &ParamSet) -> Vec<f64> {
        params.data(self.gamma_raw).iter().map(|g| g * g).collect()
    }

    pub fn forward(&self, params: &ParamSet, x: &Tensor) -> Tensor {
        gdn(x, &self.beta(params), &self.gamma(params), self.direction)
    }

    pub fn backward(
        &self,
        params: &ParamSet,
        x: &Tensor,
        grad_out: &Tensor,
        grads: &mut ParamSet,
    ) -> Tensor {
        let (dx, dbeta, dgamma) = gdn_backward(
            x,
            &self.beta(params),
            &self.gamma(params),
            self.direction,
            grad_out,
        );
        let raw = params.data(self.beta_raw);
        for ((acc, d), r) in grads.data_mut(self.beta_raw).iter_mut().zip(&dbeta).zip(raw) {
            *acc += 2.0 * r * d;
        }
        let raw = params.data(self.gamma_raw);
        for ((acc, d), r) in grads.data_mut(self.gamma_raw).iter_mut().zip(&dgamma).zip(raw) {
            *acc += 2.0 * r * d;
        }
        dx
    }
}

//! Reconstruction and privacy-aware training objectives.
//!
//! Distortion `d(a, b)` is the per-pixel mean squared error, so thresholds do
//! not depend on resolution. The privacy-aware objective adds, for every
//! item whose eavesdropper reconstruction is farther than `ε` from the
//! all-black image, `λ · d(0, ŝ_e)`. The `d(0, ŝ_e) > ε` gate is a constant
//! under differentiation.

use alloc::vec::Vec;

use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Mse,
    SecureMse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    /// Weight `λ` of the leakage penalty. Ignored for [`ObjectiveKind::Mse`].
    pub lambda: f64,
    /// Threshold `ε` on the per-pixel MSE to black. Ignored for [`ObjectiveKind::Mse`].
    pub epsilon: f64,
}

impl ObjectiveConfig {
    pub fn mse() -> Self {
        ObjectiveConfig {
            kind: ObjectiveKind::Mse,
            lambda: 0.5,
            epsilon: 0.05,
        }
    }

    pub fn secure(lambda: f64, epsilon: f64) -> Self {
        ObjectiveConfig {
            kind: ObjectiveKind::SecureMse,
            lambda,
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::Config("lambda and epsilon must be nonnegative".into()));
        }
        Ok(())
    }

    /// Whether the eavesdropper branch contributes to the loss.
    pub fn uses_eve(&self) -> bool {
        self.kind == ObjectiveKind::SecureMse
    }
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self::mse()
    }
}

/// Batch diagnostics for one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub total: f64,
    /// Mean of `d(s, ŝ_b)`.
    pub bob_distortion: f64,
    /// Mean of `d(0, ŝ_e)`; zero when Eve was not evaluated.
    pub eve_blackness_distance: f64,
    /// Fraction of items with `d(0, ŝ_e) > ε`.
    pub penalty_active_fraction: f64,
}

fn check_same(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(a.shape(), b.shape()));
    }
    Ok(())
}

/// Per-item mean squared error.
pub fn distortion(a: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    check_same(a, b)?;
    let n = a.item_len() as f64;
    Ok((0..a.batch())
        .map(|i| {
            a.item(i)
                .iter()
                .zip(b.item(i))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                / n
        })
        .collect())
}

/// Per-item `d(0, ŝ)`, the mean squared pixel value.
pub fn distance_to_black(s_hat: &Tensor) -> Vec<f64> {
    let n = s_hat.item_len() as f64;
    (0..s_hat.batch())
        .map(|i| s_hat.item(i).iter().map(|v| v * v).sum::<f64>() / n)
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Batch mean of [`distortion`].
pub fn mse_loss(s: &Tensor, s_hat: &Tensor) -> Result<f64> {
    Ok(mean(&distortion(s, s_hat)?))
}

/// Gradient of [`mse_loss`] w.r.t. `s_hat`.
pub fn mse_loss_grad(s: &Tensor, s_hat: &Tensor) -> Result<Tensor> {
    check_same(s, s_hat)?;
    let scale = 2.0 / (s.batch() * s.item_len()) as f64;
    let mut g = s_hat.clone();
    for (gv, sv) in g.data_mut().iter_mut().zip(s.data()) {
        *gv = scale * (*gv - sv);
    }
    Ok(g)
}

/// Per-item leakage criterion `d'`: `-d(0, ŝ_e)` above the threshold, else zero.
pub fn leakage_penalty(s_hat_e: &Tensor, epsilon: f64) -> Vec<f64> {
    distance_to_black(s_hat_e)
        .into_iter()
        .map(|d| if d > epsilon { -d } else { 0.0 })
        .collect()
}

/// Loss value, report and gradients for one batch.
#[derive(Debug, Clone)]
pub struct ObjectiveOutput {
    pub report: LossReport,
    pub grad_bob: Tensor,
    /// `None` when the objective does not use Eve's reconstruction.
    pub grad_eve: Option<Tensor>,
}

/// `mean_i [ d(s_i, ŝ_b,i) − λ d'(ŝ_e,i) ]` and its report.
pub fn secure_mse_loss(
    s: &Tensor,
    s_hat_b: &Tensor,
    s_hat_e: &Tensor,
    config: &ObjectiveConfig,
) -> Result<(f64, LossReport)> {
    if config.kind != ObjectiveKind::SecureMse {
        return Err(Error::Objective("secure_mse_loss needs a SecureMse config".into()));
    }
    let out = evaluate(config, s, s_hat_b, Some(s_hat_e))?;
    Ok((out.report.total, out.report))
}

/// Evaluates either objective with gradients. `s_hat_e` is required for
/// [`ObjectiveKind::SecureMse`] and ignored for [`ObjectiveKind::Mse`].
pub fn evaluate(
    config: &ObjectiveConfig,
    s: &Tensor,
    s_hat_b: &Tensor,
    s_hat_e: Option<&Tensor>,
) -> Result<ObjectiveOutput> {
    config.validate()?;
    let bob = distortion(s, s_hat_b)?;
    let bob_distortion = mean(&bob);
    let grad_bob = mse_loss_grad(s, s_hat_b)?;
    match config.kind {
        ObjectiveKind::Mse => Ok(ObjectiveOutput {
            report: LossReport {
                total: bob_distortion,
                bob_distortion,
                eve_blackness_distance: s_hat_e.map(|e| mean(&distance_to_black(e))).unwrap_or(0.0),
                penalty_active_fraction: 0.0,
            },
            grad_bob,
            grad_eve: None,
        }),
        ObjectiveKind::SecureMse => {
            let eve = s_hat_e.ok_or_else(|| {
                Error::Objective("SecureMse needs the eavesdropper reconstruction".into())
            })?;
            check_same(s, eve)?;
            let black = distance_to_black(eve);
            let penalty = leakage_penalty(eve, config.epsilon);
            let b = s.batch() as f64;
            let total = bob
                .iter()
                .zip(&penalty)
                .map(|(d, p)| d - config.lambda * p)
                .sum::<f64>()
                / b;
            let active = penalty.iter().filter(|&&p| p != 0.0).count();
            let mut grad_eve = eve.clone();
            let scale = 2.0 * config.lambda / (b * eve.item_len() as f64);
            for (i, &p) in penalty.iter().enumerate() {
                let factor = if p != 0.0 { scale } else { 0.0 };
                grad_eve.item_mut(i).iter_mut().for_each(|v| *v *= factor);
            }
            Ok(ObjectiveOutput {
                report: LossReport {
                    total,
                    bob_distortion,
                    eve_blackness_distance: mean(&black),
                    penalty_active_fraction: active as f64 / b,
                },
                grad_bob,
                grad_eve: Some(grad_eve),
            })
        }
    }
}

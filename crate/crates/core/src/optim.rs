//! Adaptive-moment (Adam) optimizer over a [`ParamSet`].

use crate::math::{powf, sqrt};
use crate::params::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: ParamSet,
    v: ParamSet,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        Adam {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet) -> Result<()> {
        params.check_layout(grads)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.t += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - powf(beta1, self.t as f64);
        let bc2 = 1.0 - powf(beta2, self.t as f64);
        for idx in 0..params.len() {
            let g = grads.data(idx);
            let m = self.m.data_mut(idx);
            for (mv, gv) in m.iter_mut().zip(g) {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
            }
            let v = self.v.data_mut(idx);
            for (vv, gv) in v.iter_mut().zip(g) {
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
            }
            let (m, v) = (self.m.data(idx), self.v.data(idx));
            for ((p, mv), vv) in params.data_mut(idx).iter_mut().zip(m).zip(v) {
                *p -= learning_rate * (mv / bc1) / (sqrt(vv / bc2) + eps);
            }
        }
        Ok(())
    }
}

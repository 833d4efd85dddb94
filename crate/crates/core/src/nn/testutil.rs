//! Finite-difference helpers shared by layer tests.

use alloc::vec::Vec;

use rand::Rng;

use crate::params::ParamSet;
use crate::rng::stream;
use crate::tensor::Tensor;

pub(crate) const FD_STEP: f64 = 1e-5;
pub(crate) const FD_TOL: f64 = 1e-4;

pub(crate) fn random_tensor(shape: [usize; 4], seed: u64) -> Tensor {
    let mut rng = stream(seed, "test-tensor", 0);
    let n = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
}

fn probe_weights(len: usize) -> Vec<f64> {
    let mut rng = stream(99, "probe", len as u64);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks parameter gradients of the scalar `sum(r * f(params))` for a fixed
/// random probe `r`.
pub(crate) fn check_param_grads(
    params: &ParamSet,
    forward: impl Fn(&ParamSet) -> Tensor,
    backward: impl Fn(&ParamSet, &Tensor, &mut ParamSet),
) {
    let out = forward(params);
    let r = probe_weights(out.data().len());
    let g = Tensor::from_vec(out.shape(), r.clone()).unwrap();
    let mut grads = params.zeros_like();
    backward(params, &g, &mut grads);
    let mut p = params.clone();
    for idx in 0..params.len() {
        let len = params.data(idx).len();
        let stride = (len / 24).max(1);
        for j in (0..len).step_by(stride) {
            let orig = p.data(idx)[j];
            p.data_mut(idx)[j] = orig + FD_STEP;
            let up = dot(forward(&p).data(), &r);
            p.data_mut(idx)[j] = orig - FD_STEP;
            let down = dot(forward(&p).data(), &r);
            p.data_mut(idx)[j] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let analytic = grads.data(idx)[j];
            assert!(
                rel_err(analytic, numeric) < FD_TOL,
                "param {} [{j}]: analytic {analytic} numeric {numeric}",
                params.get(idx).name
            );
        }
    }
}

pub(crate) fn check_input_grad(
    x: &Tensor,
    forward: impl Fn(&Tensor) -> Tensor,
    backward: impl Fn(&Tensor, &Tensor) -> Tensor,
) {
    let out = forward(x);
    let r = probe_weights(out.data().len());
    let g = Tensor::from_vec(out.shape(), r.clone()).unwrap();
    let dx = backward(x, &g);
    let mut xp = x.clone();
    let len = x.data().len();
    for j in (0..len).step_by((len / 40).max(1)) {
        let orig = xp.data()[j];
        xp.data_mut()[j] = orig + FD_STEP;
        let up = dot(forward(&xp).data(), &r);
        xp.data_mut()[j] = orig - FD_STEP;
        let down = dot(forward(&xp).data(), &r);
        xp.data_mut()[j] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        assert!(
            rel_err(dx.data()[j], numeric) < FD_TOL,
            "input [{j}]: analytic {} numeric {numeric}",
            dx.data()[j]
        );
    }
}

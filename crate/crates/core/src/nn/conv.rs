use alloc::format;
use alloc::vec;

use rand::Rng;

use crate::linalg::gemm;
use crate::math::sqrt;
use crate::params::{Param, ParamSet};
use crate::tensor::Tensor;

/// 2-D convolution with square kernel, "same"-style zero padding of
/// `kernel / 2` and configurable stride. Weights are `[out, in, k, k]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    weight: usize,
    bias: usize,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
}

impl Conv2d {
    pub fn register(
        params: &mut ParamSet,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
    ) -> Self {
        let weight = params.push(Param::zeros(
            format!("{name}.weight"),
            &[out_ch, in_ch, kernel, kernel],
        ));
        let bias = params.push(Param::zeros(format!("{name}.bias"), &[out_ch]));
        Conv2d {
            weight,
            bias,
            in_ch,
            out_ch,
            kernel,
            stride,
            pad: kernel / 2,
        }
    }

    /// Uniform init with standard deviation `gain / sqrt(fan_in)`; zero bias.
    pub fn init<R: Rng>(&self, params: &mut ParamSet, rng: &mut R, gain: f64) {
        let fan_in = (self.in_ch * self.kernel * self.kernel) as f64;
        let bound = gain * sqrt(3.0 / fan_in);
        for w in params.data_mut(self.weight) {
            *w = rng.random_range(-bound..bound);
        }
        params.data_mut(self.bias).iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn out_size(&self, h: usize, w: usize) -> (usize, usize) {
        let k = self.kernel;
        let p = self.pad;
        (
            (h + 2 * p - k) / self.stride + 1,
            (w + 2 * p - k) / self.stride + 1,
        )
    }

    fn col_rows(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }

    pub fn forward(&self, params: &ParamSet, x: &Tensor) -> Tensor {
        assert_eq!(x.channels(), self.in_ch, "conv input channels");
        let (h, w) = (x.height(), x.width());
        let (ho, wo) = self.out_size(h, w);
        let hw = ho * wo;
        let rows = self.col_rows();
        let weight = params.data(self.weight);
        let bias = params.data(self.bias);
        let mut out = Tensor::zeros([x.batch(), self.out_ch, ho, wo]);
        let mut cols = vec![0.0; rows * hw];
        for i in 0..x.batch() {
            let dst = out.item_mut(i);
            for (f, b) in bias.iter().enumerate() {
                dst[f * hw..(f + 1) * hw].iter_mut().for_each(|v| *v = *b);
            }
            if self.is_pointwise() {
                gemm(self.out_ch, rows, hw, 1.0, weight, false, x.item(i), false, 1.0, dst);
            } else {
                self.im2col(x.item(i), h, w, ho, wo, &mut cols);
                gemm(self.out_ch, rows, hw, 1.0, weight, false, &cols, false, 1.0, dst);
            }
        }
        out
    }

    /// Accumulates weight and bias gradients into `grads` and returns the
    /// gradient with respect to `x`.
    pub fn backward(
        &self,
        params: &ParamSet,
        x: &Tensor,
        grad_out: &Tensor,
        grads: &mut ParamSet,
    ) -> Tensor {
        let (h, w) = (x.height(), x.width());
        let (ho, wo) = self.out_size(h, w);
        let hw = ho * wo;
        let rows = self.col_rows();
        debug_assert_eq!(grad_out.shape(), [x.batch(), self.out_ch, ho, wo]);
        let weight = params.data(self.weight);
        let mut dx = Tensor::zeros(x.shape());
        let mut cols = vec![0.0; rows * hw];
        let mut dcols = vec![0.0; rows * hw];
        let mut dw = vec![0.0; self.out_ch * rows];
        let mut db = vec![0.0; self.out_ch];
        for i in 0..x.batch() {
            let g = grad_out.item(i);
            for (f, acc) in db.iter_mut().enumerate() {
                *acc += g[f * hw..(f + 1) * hw].iter().sum::<f64>();
            }
            if self.is_pointwise() {
                gemm(self.out_ch, hw, rows, 1.0, g, false, x.item(i), true, 1.0, &mut dw);
                gemm(rows, self.out_ch, hw, 1.0, weight, true, g, false, 0.0, dx.item_mut(i));
            } else {
                self.im2col(x.item(i), h, w, ho, wo, &mut cols);
                gemm(self.out_ch, hw, rows, 1.0, g, false, &cols, true, 1.0, &mut dw);
                gemm(rows, self.out_ch, hw, 1.0, weight, true, g, false, 0.0, &mut dcols);
                self.col2im(&dcols, h, w, ho, wo, dx.item_mut(i));
            }
        }
        for (a, b) in grads.data_mut(self.weight).iter_mut().zip(&dw) {
            *a += b;
        }
        for (a, b) in grads.data_mut(self.bias).iter_mut().zip(&db) {
            *a += b;
        }
        dx
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1
    }

    fn im2col(&self, src: &[f64], h: usize, w: usize, ho: usize, wo: usize, cols: &mut [f64]) {
        let (k, s, p) = (self.kernel, self.stride, self.pad as isize);
        for c in 0..self.in_ch {
            let plane = &src[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut cols[row * ho * wo..(row + 1) * ho * wo];
                    for oy in 0..ho {
                        let iy = (oy * s + ki) as isize - p;
                        let line = &mut dst[oy * wo..(oy + 1) * wo];
                        if iy < 0 || iy >= h as isize {
                            line.iter_mut().for_each(|v| *v = 0.0);
                            continue;
                        }
                        let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                        for (ox, v) in line.iter_mut().enumerate() {
                            let ix = (ox * s + kj) as isize - p;
                            *v = if ix < 0 || ix >= w as isize {
                                0.0
                            } else {
                                src_row[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[f64], h: usize, w: usize, ho: usize, wo: usize, dst: &mut [f64]) {
        let (k, s, p) = (self.kernel, self.stride, self.pad as isize);
        for c in 0..self.in_ch {
            let plane = &mut dst[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src = &cols[row * ho * wo..(row + 1) * ho * wo];
                    for oy in 0..ho {
                        let iy = (oy * s + ki) as isize - p;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst_row = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                        for ox in 0..wo {
                            let ix = (ox * s + kj) as isize - p;
                            if ix >= 0 && ix < w as isize {
                                dst_row[ix as usize] += src[oy * wo + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Direct nested-loop convolution; test oracle for the im2col path.
#[cfg(test)]
pub(crate) fn conv_naive(conv: &Conv2d, params: &ParamSet, x: &Tensor) -> Tensor {
    let (ho, wo) = conv.out_size(x.height(), x.width());
    let mut out = Tensor::zeros([x.batch(), conv.out_ch, ho, wo]);
    let wgt = params.data(conv.weight);
    let b = params.data(conv.bias);
    let k = conv.kernel;
    for n in 0..x.batch() {
        for f in 0..conv.out_ch {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = b[f];
                    for c in 0..conv.in_ch {
                        for ki in 0..k {
                            for kj in 0..k {
                                let iy = (oy * conv.stride + ki) as isize - conv.pad as isize;
                                let ix = (ox * conv.stride + kj) as isize - conv.pad as isize;
                                if iy < 0 || ix < 0 || iy >= x.height() as isize || ix >= x.width() as isize {
                                    continue;
                                }
                                let xv = x.item(n)[(c * x.height() + iy as usize) * x.width() + ix as usize];
                                acc += wgt[((f * conv.in_ch + c) * k + ki) * k + kj] * xv;
                            }
                        }
                    }
                    out.item_mut(n)[(f * ho + oy) * wo + ox] = acc;
                }
            }
        }
    }
    out
}

//! 2-D convolution and transposed convolution via im2col + GEMM, NCHW layout.

use crate::error::{Error, Result};
use crate::nn::init::{init_tensor, Init};
use crate::nn::layer::missing_cache;
use crate::nn::scalar::{gemm, Scalar};
use crate::nn::tensor::Tensor;
use crate::rng::Rng;

/// Geometry of a convolution window sweep over one `c x h x w` image.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvGeom {
    pub fn new(c: usize, h: usize, w: usize, kh: usize, kw: usize, stride: usize, pad: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("stride must be >= 1"));
        }
        let (ph, pw) = (h + 2 * pad, w + 2 * pad);
        if kh == 0 || kw == 0 || kh > ph || kw > pw {
            return Err(Error::shape(format!(
                "kernel {kh}x{kw} does not fit padded input {ph}x{pw}"
            )));
        }
        Ok(Self {
            c,
            h,
            w,
            kh,
            kw,
            stride,
            pad,
            oh: (ph - kh) / stride + 1,
            ow: (pw - kw) / stride + 1,
        })
    }

    fn col_rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn col_cols(&self) -> usize {
        self.oh * self.ow
    }

    // Output columns whose input column `ox * stride + j - pad` lands in [0, w).
    fn valid_ox(&self, j: usize) -> (usize, usize) {
        let s = self.stride;
        let lo = if self.pad > j { (self.pad - j).div_ceil(s) } else { 0 };
        let hi_excl = if self.w + self.pad > j {
            ((self.w + self.pad - j - 1) / s + 1).min(self.ow)
        } else {
            0
        };
        (lo.min(hi_excl), hi_excl)
    }
}

pub(crate) fn im2col<T: Scalar>(x: &[T], g: &ConvGeom, col: &mut [T]) {
    let p = g.col_cols();
    for c in 0..g.c {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for i in 0..g.kh {
            for j in 0..g.kw {
                let row = ((c * g.kh + i) * g.kw + j) * p;
                let (lo, hi) = g.valid_ox(j);
                for oy in 0..g.oh {
                    let dst = &mut col[row + oy * g.ow..row + (oy + 1) * g.ow];
                    let iy = (oy * g.stride + i) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    dst[..lo].fill(T::zero());
                    dst[hi..].fill(T::zero());
                    if g.stride == 1 {
                        let start = lo + j - g.pad;
                        dst[lo..hi].copy_from_slice(&src[start..start + (hi - lo)]);
                    } else {
                        for (ox, d) in dst.iter_mut().enumerate().take(hi).skip(lo) {
                            *d = src[ox * g.stride + j - g.pad];
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters-adds columns back into the image.
pub(crate) fn col2im<T: Scalar>(col: &[T], g: &ConvGeom, x: &mut [T]) {
    let p = g.col_cols();
    for c in 0..g.c {
        let plane = &mut x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for i in 0..g.kh {
            for j in 0..g.kw {
                let row = ((c * g.kh + i) * g.kw + j) * p;
                let (lo, hi) = g.valid_ox(j);
                for oy in 0..g.oh {
                    let iy = (oy * g.stride + i) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let src = &col[row + oy * g.ow..row + (oy + 1) * g.ow];
                    let dst = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for ox in lo..hi {
                        let ix = ox * g.stride + j - g.pad;
                        dst[ix] = dst[ix] + src[ox];
                    }
                }
            }
        }
    }
}

fn add_row_sums<T: Scalar>(src: &[T], rows: usize, cols: usize, acc: &mut [T]) {
    for r in 0..rows {
        let s = src[r * cols..(r + 1) * cols]
            .iter()
            .fold(T::zero(), |a, &b| a + b);
        acc[r] = acc[r] + s;
    }
}

/// Cross-correlation layer with weights `[filters, channels, kh, kw]`.
#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(in_channels: usize, filters: usize, kernel: usize, stride: usize, padding: usize, init: Init, rng: &mut Rng) -> Self {
        let mut weight = Tensor::param(&[filters, in_channels, kernel, kernel]);
        let fan_in = in_channels * kernel * kernel;
        let fan_out = filters * kernel * kernel;
        init_tensor(&mut weight, init, fan_in, fan_out, rng);
        Self {
            in_channels,
            filters,
            kernel,
            stride,
            padding,
            weight,
            bias: Tensor::param(&[filters]),
            input: None,
        }
    }

    pub(crate) fn from_parts(stride: usize, padding: usize, weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let ws = weight.shape().to_vec();
        if ws.len() != 4 || ws[2] != ws[3] || bias.shape() != [ws[0]] {
            return Err(Error::shape(format!(
                "conv2d weight {ws:?} / bias {:?} inconsistent",
                bias.shape()
            )));
        }
        let mut weight = weight;
        let mut bias = bias;
        weight.grad_mut();
        bias.grad_mut();
        Ok(Self {
            in_channels: ws[1],
            filters: ws[0],
            kernel: ws[2],
            stride,
            padding,
            weight,
            bias,
            input: None,
        })
    }

    fn geom(&self, shape: &[usize]) -> Result<ConvGeom> {
        if shape.len() != 3 || shape[0] != self.in_channels {
            return Err(Error::shape(format!(
                "conv2d expects [{}, H, W], got {shape:?}",
                self.in_channels
            )));
        }
        ConvGeom::new(shape[0], shape[1], shape[2], self.kernel, self.kernel, self.stride, self.padding)
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let g = self.geom(input)?;
        Ok(vec![self.filters, g.oh, g.ow])
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.geom(&x.shape()[1..])?;
        let n = x.batch();
        let (k, p) = (g.col_rows(), g.col_cols());
        let mut out = Tensor::zeros(&[n, self.filters, g.oh, g.ow]);
        let mut col = vec![T::zero(); k * p];
        let bias = self.bias.data();
        for (b, dst) in out.data_mut().chunks_mut(self.filters * p).enumerate() {
            im2col(x.sample(b), &g, &mut col);
            gemm(false, false, self.filters, p, k, T::one(), self.weight.data(), &col, T::zero(), dst);
            for (f, row) in dst.chunks_mut(p).enumerate() {
                row.iter_mut().for_each(|v| *v = *v + bias[f]);
            }
        }
        self.input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let x = self.input.as_ref().ok_or_else(missing_cache)?;
        let g = self.geom(&x.shape()[1..])?;
        let (k, p) = (g.col_rows(), g.col_cols());
        let mut col = vec![T::zero(); k * p];
        let mut dx = need_input.then(|| Tensor::zeros(x.shape()));
        let xs = x.sample_len();
        for b in 0..x.batch() {
            let gb = grad.sample(b);
            im2col(x.sample(b), &g, &mut col);
            {
                let (_, dw) = self.weight.value_and_grad_mut();
                gemm(false, true, self.filters, k, p, T::one(), gb, &col, T::one(), dw);
            }
            add_row_sums(gb, self.filters, p, self.bias.grad_mut());
            if let Some(dx) = dx.as_mut() {
                gemm(true, false, k, p, self.filters, T::one(), self.weight.data(), gb, T::zero(), &mut col);
                col2im(&col, &g, &mut dx.data_mut()[b * xs..(b + 1) * xs]);
            }
        }
        Ok(dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }
}

/// Transposed convolution (adjoint of [`Conv2d`]) with weights
/// `[in_channels, filters, kh, kw]`; output size `(H - 1) * stride - 2 * pad + k`.
#[derive(Clone, Debug)]
pub struct ConvTranspose2d<T> {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> ConvTranspose2d<T> {
    pub fn new(in_channels: usize, filters: usize, kernel: usize, stride: usize, padding: usize, init: Init, rng: &mut Rng) -> Self {
        let mut weight = Tensor::param(&[in_channels, filters, kernel, kernel]);
        let fan_in = in_channels * kernel * kernel;
        let fan_out = filters * kernel * kernel;
        init_tensor(&mut weight, init, fan_in, fan_out, rng);
        Self {
            in_channels,
            filters,
            kernel,
            stride,
            padding,
            weight,
            bias: Tensor::param(&[filters]),
            input: None,
        }
    }

    pub(crate) fn from_parts(stride: usize, padding: usize, weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let ws = weight.shape().to_vec();
        if ws.len() != 4 || ws[2] != ws[3] || bias.shape() != [ws[1]] {
            return Err(Error::shape(format!(
                "conv2d_transpose weight {ws:?} / bias {:?} inconsistent",
                bias.shape()
            )));
        }
        let mut weight = weight;
        let mut bias = bias;
        weight.grad_mut();
        bias.grad_mut();
        Ok(Self {
            in_channels: ws[0],
            filters: ws[1],
            kernel: ws[2],
            stride,
            padding,
            weight,
            bias,
            input: None,
        })
    }

    // Geometry of the equivalent forward convolution over the *output* image.
    fn geom(&self, shape: &[usize]) -> Result<ConvGeom> {
        if shape.len() != 3 || shape[0] != self.in_channels || self.stride == 0 {
            return Err(Error::shape(format!(
                "conv2d_transpose expects [{}, H, W], got {shape:?}",
                self.in_channels
            )));
        }
        let (h, w) = (shape[1], shape[2]);
        let full_h = (h - 1) * self.stride + self.kernel;
        let full_w = (w - 1) * self.stride + self.kernel;
        if h == 0 || w == 0 || full_h <= 2 * self.padding || full_w <= 2 * self.padding {
            return Err(Error::shape(format!("conv2d_transpose output empty for {shape:?}")));
        }
        let g = ConvGeom::new(
            self.filters,
            full_h - 2 * self.padding,
            full_w - 2 * self.padding,
            self.kernel,
            self.kernel,
            self.stride,
            self.padding,
        )?;
        debug_assert_eq!((g.oh, g.ow), (h, w));
        Ok(g)
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let g = self.geom(input)?;
        Ok(vec![self.filters, g.h, g.w])
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.geom(&x.shape()[1..])?;
        let (k, p) = (g.col_rows(), g.col_cols());
        let out_plane = g.h * g.w;
        let mut out = Tensor::zeros(&[x.batch(), self.filters, g.h, g.w]);
        let mut col = vec![T::zero(); k * p];
        for (b, dst) in out.data_mut().chunks_mut(self.filters * out_plane).enumerate() {
            gemm(true, false, k, p, self.in_channels, T::one(), self.weight.data(), x.sample(b), T::zero(), &mut col);
            col2im(&col, &g, dst);
            for (f, plane) in dst.chunks_mut(out_plane).enumerate() {
                let bf = self.bias.data()[f];
                plane.iter_mut().for_each(|v| *v = *v + bf);
            }
        }
        self.input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let x = self.input.as_ref().ok_or_else(missing_cache)?;
        let g = self.geom(&x.shape()[1..])?;
        let (k, p) = (g.col_rows(), g.col_cols());
        let out_plane = g.h * g.w;
        let mut col = vec![T::zero(); k * p];
        let mut dx = need_input.then(|| Tensor::zeros(x.shape()));
        let xs = x.sample_len();
        for b in 0..x.batch() {
            let gb = grad.sample(b);
            im2col(gb, &g, &mut col);
            {
                let (_, dw) = self.weight.value_and_grad_mut();
                gemm(false, true, self.in_channels, k, p, T::one(), x.sample(b), &col, T::one(), dw);
            }
            add_row_sums(gb, self.filters, out_plane, self.bias.grad_mut());
            if let Some(dx) = dx.as_mut() {
                gemm(false, false, self.in_channels, p, k, T::one(), self.weight.data(), &col, T::zero(), &mut dx.data_mut()[b * xs..(b + 1) * xs]);
            }
        }
        Ok(dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn naive_conv(x: &[f64], c: usize, h: usize, w: usize, wt: &[f64], f: usize, k: usize, s: usize, pad: usize) -> (Vec<f64>, usize, usize) {
        let oh = (h + 2 * pad - k) / s + 1;
        let ow = (w + 2 * pad - k) / s + 1;
        let mut out = vec![0.0; f * oh * ow];
        for fi in 0..f {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for ci in 0..c {
                        for i in 0..k {
                            for j in 0..k {
                                let iy = (oy * s + i) as isize - pad as isize;
                                let ix = (ox * s + j) as isize - pad as isize;
                                if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    acc += x[(ci * h + iy as usize) * w + ix as usize]
                                        * wt[((fi * c + ci) * k + i) * k + j];
                                }
                            }
                        }
                    }
                    out[(fi * oh + oy) * ow + ox] = acc;
                }
            }
        }
        (out, oh, ow)
    }

    #[test]
    fn matches_naive_for_strides_and_padding() {
        let mut rng = rng_from_seed(3);
        for (s, pad, k) in [(1, 0, 3), (2, 1, 3), (1, 2, 5), (2, 0, 2), (3, 1, 3)] {
            let (c, h, w, f) = (2, 7, 6, 3);
            let mut conv = Conv2d::<f64>::new(c, f, k, s, pad, Init::He, &mut rng);
            let xs: Vec<f64> = (0..c * h * w).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
            let x = Tensor::from_vec(&[1, c, h, w], xs.clone()).unwrap();
            let y = conv.forward(&x).unwrap();
            let (want, oh, ow) = naive_conv(&xs, c, h, w, conv.weight.data(), f, k, s, pad);
            assert_eq!(y.shape(), &[1, f, oh, ow]);
            for (a, b) in y.data().iter().zip(&want) {
                assert!((a - b).abs() < 1e-9, "s={s} pad={pad} k={k}");
            }
        }
    }

    #[test]
    fn transpose_is_adjoint_of_conv() {
        // <conv(x), y> == <x, conv_t(y)> when both share weights and bias is zero.
        let mut rng = rng_from_seed(5);
        let (c, f, k, s, pad) = (2, 3, 3, 2, 1);
        let conv = Conv2d::<f64>::new(c, f, k, s, pad, Init::Glorot, &mut rng);
        let mut wt = Tensor::zeros(&[f, c, k, k]);
        wt.data_mut().copy_from_slice(conv.weight.data());
        let mut conv = conv;
        let mut convt = ConvTranspose2d::from_parts(s, pad, wt, Tensor::zeros(&[c])).unwrap();
        let x = Tensor::from_vec(&[1, c, 7, 7], (0..98).map(|i| (i as f64 * 0.3).sin()).collect()).unwrap();
        let cx = conv.forward(&x).unwrap();
        let y = Tensor::from_vec(cx.shape(), (0..cx.len()).map(|i| (i as f64 * 0.7).cos()).collect()).unwrap();
        let ty = convt.forward(&y).unwrap();
        assert_eq!(ty.shape(), x.shape());
        let lhs: f64 = cx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(ty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn kernel_larger_than_input_rejected() {
        let mut rng = rng_from_seed(1);
        let conv = Conv2d::<f32>::new(1, 1, 5, 1, 0, Init::He, &mut rng);
        assert!(conv.output_shape(&[1, 3, 3]).is_err());
        assert!(conv.output_shape(&[2, 9, 9]).is_err());
    }
}

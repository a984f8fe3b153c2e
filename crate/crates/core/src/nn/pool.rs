use crate::error::{Error, Result};
use crate::nn::layer::missing_cache;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct MaxPool2d {
    pub size: usize,
    pub stride: usize,
    // flat input index of each output's maximum, plus the input shape
    argmax: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(size: usize, stride: usize) -> Self {
        Self {
            size,
            stride,
            argmax: None,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 3 || self.size == 0 || self.stride == 0 {
            return Err(Error::shape(format!("max_pool2d expects [C, H, W], got {input:?}")));
        }
        if input[1] < self.size || input[2] < self.size {
            return Err(Error::shape(format!(
                "pool window {} larger than input {input:?}",
                self.size
            )));
        }
        Ok(vec![
            input[0],
            (input[1] - self.size) / self.stride + 1,
            (input[2] - self.size) / self.stride + 1,
        ])
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let os = self.output_shape(&x.shape()[1..])?;
        let (h, w) = (x.shape()[2], x.shape()[3]);
        let (oh, ow) = (os[1], os[2]);
        let planes = x.batch() * os[0];
        let mut out = Tensor::zeros(&[x.batch(), os[0], oh, ow]);
        let mut idx = vec![0usize; out.len()];
        let src = x.data();
        for p in 0..planes {
            let base = p * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * self.stride * w + ox * self.stride;
                    for i in 0..self.size {
                        let row = base + (oy * self.stride + i) * w + ox * self.stride;
                        for j in 0..self.size {
                            // first maximum wins on ties
                            if src[row + j] > src[best] {
                                best = row + j;
                            }
                        }
                    }
                    let o = (p * oh + oy) * ow + ox;
                    out.data_mut()[o] = src[best];
                    idx[o] = best;
                }
            }
        }
        self.argmax = Some((idx, x.shape().to_vec()));
        Ok(out)
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let (idx, shape) = self.argmax.as_ref().ok_or_else(missing_cache)?;
        let mut dx = Tensor::zeros(shape);
        let d = dx.data_mut();
        for (&i, &g) in idx.iter().zip(grad.data()) {
            d[i] = d[i] + g;
        }
        Ok(dx)
    }
}

#[derive(Clone, Debug)]
pub struct UpsampleNearest {
    pub factor: usize,
    input_shape: Option<Vec<usize>>,
}

impl UpsampleNearest {
    pub fn new(factor: usize) -> Self {
        Self {
            factor,
            input_shape: None,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 3 || self.factor == 0 {
            return Err(Error::shape(format!("upsample expects [C, H, W], got {input:?}")));
        }
        Ok(vec![input[0], input[1] * self.factor, input[2] * self.factor])
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let os = self.output_shape(&x.shape()[1..])?;
        let (h, w) = (x.shape()[2], x.shape()[3]);
        let f = self.factor;
        let (oh, ow) = (os[1], os[2]);
        let mut out = Tensor::zeros(&[x.batch(), os[0], oh, ow]);
        let planes = x.batch() * os[0];
        let src = x.data();
        let dst = out.data_mut();
        for p in 0..planes {
            for oy in 0..oh {
                let srow = &src[p * h * w + (oy / f) * w..p * h * w + (oy / f + 1) * w];
                let drow = &mut dst[(p * oh + oy) * ow..(p * oh + oy + 1) * ow];
                for (ox, d) in drow.iter_mut().enumerate() {
                    *d = srow[ox / f];
                }
            }
        }
        self.input_shape = Some(x.shape().to_vec());
        Ok(out)
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.input_shape.as_ref().ok_or_else(missing_cache)?;
        let (h, w) = (shape[2], shape[3]);
        let f = self.factor;
        let (oh, ow) = (h * f, w * f);
        let mut dx = Tensor::zeros(shape);
        let planes = shape[0] * shape[1];
        let g = grad.data();
        let d = dx.data_mut();
        for p in 0..planes {
            for oy in 0..oh {
                for ox in 0..ow {
                    let i = p * h * w + (oy / f) * w + ox / f;
                    d[i] = d[i] + g[(p * oh + oy) * ow + ox];
                }
            }
        }
        Ok(dx)
    }
}

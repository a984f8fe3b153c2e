use crate::error::{Error, Result};
use crate::nn::init::{init_tensor, Init};
use crate::nn::layer::missing_cache;
use crate::nn::scalar::{gemm, Scalar};
use crate::nn::tensor::Tensor;
use crate::rng::Rng;

/// Fully connected layer, `y = x W^T + b` with `W: [out, in]`.
#[derive(Clone, Debug)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, init: Init, rng: &mut Rng) -> Self {
        let mut weight = Tensor::param(&[outputs, inputs]);
        init_tensor(&mut weight, init, inputs, outputs, rng);
        Self {
            inputs,
            outputs,
            weight,
            bias: Tensor::param(&[outputs]),
            input: None,
        }
    }

    pub(crate) fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let ws = weight.shape().to_vec();
        if ws.len() != 2 || bias.shape() != [ws[0]] {
            return Err(Error::shape(format!(
                "dense weight {ws:?} / bias {:?} inconsistent",
                bias.shape()
            )));
        }
        let (mut weight, mut bias) = (weight, bias);
        weight.grad_mut();
        bias.grad_mut();
        Ok(Self {
            inputs: ws[1],
            outputs: ws[0],
            weight,
            bias,
            input: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input != [self.inputs] {
            return Err(Error::shape(format!(
                "dense expects [{}], got {input:?}",
                self.inputs
            )));
        }
        Ok(vec![self.outputs])
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.output_shape(&x.shape()[1..])?;
        let n = x.batch();
        let mut out = Tensor::zeros(&[n, self.outputs]);
        gemm(false, true, n, self.outputs, self.inputs, T::one(), x.data(), self.weight.data(), T::zero(), out.data_mut());
        for row in out.data_mut().chunks_mut(self.outputs) {
            for (v, &b) in row.iter_mut().zip(self.bias.data()) {
                *v = *v + b;
            }
        }
        self.input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let x = self.input.as_ref().ok_or_else(missing_cache)?;
        let n = x.batch();
        {
            let (_, dw) = self.weight.value_and_grad_mut();
            gemm(true, false, self.outputs, self.inputs, n, T::one(), grad.data(), x.data(), T::one(), dw);
        }
        let db = self.bias.grad_mut();
        for row in grad.data().chunks(self.outputs) {
            for (d, &g) in db.iter_mut().zip(row) {
                *d = *d + g;
            }
        }
        if !need_input {
            return Ok(None);
        }
        let mut dx = Tensor::zeros(x.shape());
        gemm(false, false, n, self.inputs, self.outputs, T::one(), grad.data(), self.weight.data(), T::zero(), dx.data_mut());
        Ok(Some(dx))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }
}

/// How a label embedding is combined with the input vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmbedMode {
    /// `y[n] = x[n] * table[label[n]]`.
    #[default]
    Multiply,
    /// `y[n] = [x[n], table[label[n]]]`, twice the input width.
    Concat,
}

/// Learned per-class vector combined with the input according to `mode`.
#[derive(Clone, Debug)]
pub struct LabelEmbedding<T> {
    pub classes: usize,
    pub dim: usize,
    pub mode: EmbedMode,
    pub table: Tensor<T>,
    cache: Option<(Tensor<T>, Vec<usize>)>,
}

impl<T: Scalar> LabelEmbedding<T> {
    pub fn new(classes: usize, dim: usize, mode: EmbedMode, rng: &mut Rng) -> Self {
        let mut table = Tensor::param(&[classes, dim]);
        init_tensor(&mut table, Init::Normal(1.0), classes, dim, rng);
        Self {
            classes,
            dim,
            mode,
            table,
            cache: None,
        }
    }

    pub(crate) fn from_parts(table: Tensor<T>, mode: EmbedMode) -> Result<Self> {
        let s = table.shape().to_vec();
        if s.len() != 2 {
            return Err(Error::shape(format!("embedding table {s:?} must be 2-D")));
        }
        let mut table = table;
        table.grad_mut();
        Ok(Self {
            classes: s[0],
            dim: s[1],
            mode,
            table,
            cache: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input != [self.dim] {
            return Err(Error::shape(format!(
                "embedding expects [{}], got {input:?}",
                self.dim
            )));
        }
        Ok(match self.mode {
            EmbedMode::Multiply => vec![self.dim],
            EmbedMode::Concat => vec![2 * self.dim],
        })
    }

    pub fn forward(&mut self, x: &Tensor<T>, labels: Option<&[usize]>) -> Result<Tensor<T>> {
        self.output_shape(&x.shape()[1..])?;
        let labels = labels.ok_or_else(|| Error::invalid("label embedding needs labels"))?;
        if labels.len() != x.batch() {
            return Err(Error::shape(format!(
                "{} labels for batch of {}",
                labels.len(),
                x.batch()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::invalid(format!("label {bad} >= {}", self.classes)));
        }
        let dim = self.dim;
        let out = match self.mode {
            EmbedMode::Multiply => {
                let mut out = x.clone();
                for (row, &l) in out.data_mut().chunks_mut(dim).zip(labels) {
                    let e = &self.table.data()[l * dim..(l + 1) * dim];
                    row.iter_mut().zip(e).for_each(|(v, &w)| *v = *v * w);
                }
                out
            }
            EmbedMode::Concat => {
                let mut data = Vec::with_capacity(2 * x.data().len());
                for (row, &l) in x.data().chunks(dim).zip(labels) {
                    data.extend_from_slice(row);
                    data.extend_from_slice(&self.table.data()[l * dim..(l + 1) * dim]);
                }
                Tensor::from_vec(&[x.batch(), 2 * dim], data)?
            }
        };
        self.cache = Some((x.clone(), labels.to_vec()));
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let (x, labels) = self.cache.as_ref().ok_or_else(missing_cache)?;
        let dim = self.dim;
        if self.mode == EmbedMode::Concat {
            let (_, dtable) = self.table.value_and_grad_mut();
            let mut dx = Vec::with_capacity(if need_input { x.data().len() } else { 0 });
            for (row, &l) in grad.data().chunks(2 * dim).zip(labels) {
                for d in 0..dim {
                    dtable[l * dim + d] = dtable[l * dim + d] + row[dim + d];
                }
                if need_input {
                    dx.extend_from_slice(&row[..dim]);
                }
            }
            return if need_input { Tensor::from_vec(x.shape(), dx).map(Some) } else { Ok(None) };
        }
        let mut dx = need_input.then(|| grad.clone());
        let (table, dtable) = self.table.value_and_grad_mut();
        for (n, &l) in labels.iter().enumerate() {
            let g = &grad.data()[n * dim..(n + 1) * dim];
            let xs = &x.data()[n * dim..(n + 1) * dim];
            for d in 0..dim {
                dtable[l * dim + d] = dtable[l * dim + d] + g[d] * xs[d];
            }
            if let Some(dx) = dx.as_mut() {
                let row = &mut dx.data_mut()[n * dim..(n + 1) * dim];
                for d in 0..dim {
                    row[d] = row[d] * table[l * dim + d];
                }
            }
        }
        Ok(dx)
    }
}

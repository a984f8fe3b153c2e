use std::fmt;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::nn::conv::{Conv2d, ConvTranspose2d};
use crate::nn::dense::{Dense, EmbedMode, LabelEmbedding};
use crate::nn::norm::BatchNorm;
use crate::nn::pool::{MaxPool2d, UpsampleNearest};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;

pub(crate) fn missing_cache() -> Error {
    // the owning network rewrites the index
    Error::NoForwardCache(usize::MAX)
}

/// Per-call forward state supplied by the owning [`Network`](crate::nn::Network).
pub struct ForwardCtx<'a> {
    pub training: bool,
    pub rng: &'a mut Rng,
    pub labels: Option<&'a [usize]>,
}

/// Stable layer tags, also used as the checkpoint kind byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum LayerKind {
    Conv2d = 1,
    ConvTranspose2d = 2,
    Dense = 3,
    MaxPool2d = 4,
    UpsampleNearest = 5,
    Flatten = 6,
    Reshape = 7,
    Relu = 8,
    LeakyRelu = 9,
    Tanh = 10,
    Sigmoid = 11,
    Softmax = 12,
    Dropout = 13,
    BatchNorm = 14,
    Embedding = 15,
    AuxHeads = 16,
}

impl LayerKind {
    pub fn from_tag(tag: u8) -> Option<Self> {
        use LayerKind::*;
        Some(match tag {
            1 => Conv2d,
            2 => ConvTranspose2d,
            3 => Dense,
            4 => MaxPool2d,
            5 => UpsampleNearest,
            6 => Flatten,
            7 => Reshape,
            8 => Relu,
            9 => LeakyRelu,
            10 => Tanh,
            11 => Sigmoid,
            12 => Softmax,
            13 => Dropout,
            14 => BatchNorm,
            15 => Embedding,
            16 => AuxHeads,
            _ => return None,
        })
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::ConvTranspose2d => "conv2d_transpose",
            LayerKind::Dense => "dense",
            LayerKind::MaxPool2d => "max_pool2d",
            LayerKind::UpsampleNearest => "upsample_nearest",
            LayerKind::Flatten => "flatten",
            LayerKind::Reshape => "reshape",
            LayerKind::Relu => "relu",
            LayerKind::LeakyRelu => "leaky_relu",
            LayerKind::Tanh => "tanh",
            LayerKind::Sigmoid => "sigmoid",
            LayerKind::Softmax => "softmax",
            LayerKind::Dropout => "dropout",
            LayerKind::BatchNorm => "batch_norm",
            LayerKind::Embedding => "embedding",
            LayerKind::AuxHeads => "aux_heads",
        };
        f.write_str(name)
    }
}

/// One step of a sequential network.
///
/// `AuxHeads` is the two-headed output activation of the discriminator: unit 0
/// goes through a sigmoid (validity) and the remaining units through a softmax
/// (class), which is equivalent to two separate dense heads sharing the trunk.
#[derive(Clone, Debug)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    ConvTranspose2d(ConvTranspose2d<T>),
    Dense(Dense<T>),
    MaxPool2d(MaxPool2d),
    UpsampleNearest(UpsampleNearest),
    Flatten { input: Option<Vec<usize>> },
    Reshape { shape: Vec<usize>, input: Option<Vec<usize>> },
    Relu { input: Option<Tensor<T>> },
    LeakyRelu { alpha: f64, input: Option<Tensor<T>> },
    Tanh { output: Option<Tensor<T>> },
    Sigmoid { output: Option<Tensor<T>> },
    Softmax { output: Option<Tensor<T>> },
    AuxHeads { output: Option<Tensor<T>> },
    Dropout { rate: f64, mask: Option<Vec<T>> },
    BatchNorm(BatchNorm<T>),
    Embedding(LabelEmbedding<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn flatten() -> Self {
        Layer::Flatten { input: None }
    }
    pub fn reshape(shape: &[usize]) -> Self {
        Layer::Reshape {
            shape: shape.to_vec(),
            input: None,
        }
    }
    pub fn relu() -> Self {
        Layer::Relu { input: None }
    }
    pub fn leaky_relu(alpha: f64) -> Self {
        Layer::LeakyRelu { alpha, input: None }
    }
    pub fn tanh() -> Self {
        Layer::Tanh { output: None }
    }
    pub fn sigmoid() -> Self {
        Layer::Sigmoid { output: None }
    }
    pub fn softmax() -> Self {
        Layer::Softmax { output: None }
    }
    pub fn aux_heads() -> Self {
        Layer::AuxHeads { output: None }
    }
    pub fn dropout(rate: f64) -> Self {
        Layer::Dropout { rate, mask: None }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv2d(_) => LayerKind::Conv2d,
            Layer::ConvTranspose2d(_) => LayerKind::ConvTranspose2d,
            Layer::Dense(_) => LayerKind::Dense,
            Layer::MaxPool2d(_) => LayerKind::MaxPool2d,
            Layer::UpsampleNearest(_) => LayerKind::UpsampleNearest,
            Layer::Flatten { .. } => LayerKind::Flatten,
            Layer::Reshape { .. } => LayerKind::Reshape,
            Layer::Relu { .. } => LayerKind::Relu,
            Layer::LeakyRelu { .. } => LayerKind::LeakyRelu,
            Layer::Tanh { .. } => LayerKind::Tanh,
            Layer::Sigmoid { .. } => LayerKind::Sigmoid,
            Layer::Softmax { .. } => LayerKind::Softmax,
            Layer::AuxHeads { .. } => LayerKind::AuxHeads,
            Layer::Dropout { .. } => LayerKind::Dropout,
            Layer::BatchNorm(_) => LayerKind::BatchNorm,
            Layer::Embedding(_) => LayerKind::Embedding,
        }
    }

    /// True for the output activations whose gradient can be fused with the
    /// matching loss (softmax/sigmoid + cross-entropy).
    pub fn is_output_activation(&self) -> bool {
        matches!(
            self,
            Layer::Softmax { .. } | Layer::Sigmoid { .. } | Layer::AuxHeads { .. }
        )
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(l) => l.output_shape(input),
            Layer::ConvTranspose2d(l) => l.output_shape(input),
            Layer::Dense(l) => l.output_shape(input),
            Layer::MaxPool2d(l) => l.output_shape(input),
            Layer::UpsampleNearest(l) => l.output_shape(input),
            Layer::BatchNorm(l) => l.output_shape(input),
            Layer::Embedding(l) => l.output_shape(input),
            Layer::Flatten { .. } => Ok(vec![input.iter().product()]),
            Layer::Reshape { shape, .. } => {
                if shape.iter().product::<usize>() != input.iter().product::<usize>() {
                    return Err(Error::shape(format!("cannot reshape {input:?} to {shape:?}")));
                }
                Ok(shape.clone())
            }
            Layer::Softmax { .. } => {
                if input.len() != 1 {
                    return Err(Error::shape(format!("softmax expects [K], got {input:?}")));
                }
                Ok(input.to_vec())
            }
            Layer::AuxHeads { .. } => {
                if input.len() != 1 || input[0] < 3 {
                    return Err(Error::shape(format!(
                        "aux_heads expects [1 + classes] with classes >= 2, got {input:?}"
                    )));
                }
                Ok(input.to_vec())
            }
            Layer::Dropout { rate, .. } => {
                if !(0.0..1.0).contains(rate) {
                    return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok(input.to_vec())
            }
            Layer::Relu { .. } | Layer::LeakyRelu { .. } | Layer::Tanh { .. } | Layer::Sigmoid { .. } => {
                Ok(input.to_vec())
            }
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>, ctx: &mut ForwardCtx<'_>) -> Result<Tensor<T>> {
        match self {
            Layer::Conv2d(l) => l.forward(x),
            Layer::ConvTranspose2d(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
            Layer::MaxPool2d(l) => l.forward(x),
            Layer::UpsampleNearest(l) => l.forward(x),
            Layer::BatchNorm(l) => l.forward(x, ctx.training),
            Layer::Embedding(l) => l.forward(x, ctx.labels),
            Layer::Flatten { input } => {
                *input = Some(x.shape().to_vec());
                x.clone().reshape(&[x.batch(), x.sample_len()])
            }
            Layer::Reshape { shape, input } => {
                *input = Some(x.shape().to_vec());
                let mut full = vec![x.batch()];
                full.extend_from_slice(shape);
                x.clone().reshape(&full)
            }
            Layer::Relu { input } => {
                *input = Some(x.clone());
                Ok(map(x, |v| if v > T::zero() { v } else { T::zero() }))
            }
            Layer::LeakyRelu { alpha, input } => {
                *input = Some(x.clone());
                let a = T::from_f64_lossy(*alpha);
                Ok(map(x, |v| if v > T::zero() { v } else { a * v }))
            }
            Layer::Tanh { output } => {
                let y = map(x, |v| v.tanh());
                *output = Some(y.clone());
                Ok(y)
            }
            Layer::Sigmoid { output } => {
                let y = map(x, sigmoid);
                *output = Some(y.clone());
                Ok(y)
            }
            Layer::Softmax { output } => {
                let mut y = x.clone();
                let k = x.sample_len();
                y.data_mut().chunks_mut(k).for_each(softmax_in_place);
                *output = Some(y.clone());
                Ok(y)
            }
            Layer::AuxHeads { output } => {
                let mut y = x.clone();
                let k = x.sample_len();
                for row in y.data_mut().chunks_mut(k) {
                    row[0] = sigmoid(row[0]);
                    softmax_in_place(&mut row[1..]);
                }
                *output = Some(y.clone());
                Ok(y)
            }
            Layer::Dropout { rate, mask } => {
                if !ctx.training || *rate == 0.0 {
                    *mask = None;
                    return Ok(x.clone());
                }
                let keep = 1.0 - *rate;
                let scale = T::from_f64_lossy(1.0 / keep);
                let m: Vec<T> = (0..x.len())
                    .map(|_| if ctx.rng.random::<f64>() < keep { scale } else { T::zero() })
                    .collect();
                let mut y = x.clone();
                y.data_mut().iter_mut().zip(&m).for_each(|(v, &k)| *v = *v * k);
                *mask = Some(m);
                Ok(y)
            }
        }
    }

    /// Propagates `grad` (w.r.t. this layer's output) backwards, accumulating
    /// parameter gradients. Returns the input gradient when `need_input`.
    pub fn backward(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let out = match self {
            Layer::Conv2d(l) => return l.backward(grad, need_input),
            Layer::ConvTranspose2d(l) => return l.backward(grad, need_input),
            Layer::Dense(l) => return l.backward(grad, need_input),
            Layer::BatchNorm(l) => return l.backward(grad, need_input),
            Layer::Embedding(l) => return l.backward(grad, need_input),
            Layer::MaxPool2d(l) => l.backward(grad)?,
            Layer::UpsampleNearest(l) => l.backward(grad)?,
            Layer::Flatten { input } | Layer::Reshape { input, .. } => {
                let shape = input.as_ref().ok_or_else(missing_cache)?;
                grad.clone().reshape(shape)?
            }
            Layer::Relu { input } => {
                let x = input.as_ref().ok_or_else(missing_cache)?;
                zip_map(x, grad, |v, g| if v > T::zero() { g } else { T::zero() })
            }
            Layer::LeakyRelu { alpha, input } => {
                let x = input.as_ref().ok_or_else(missing_cache)?;
                let a = T::from_f64_lossy(*alpha);
                zip_map(x, grad, |v, g| if v > T::zero() { g } else { a * g })
            }
            Layer::Tanh { output } => {
                let y = output.as_ref().ok_or_else(missing_cache)?;
                zip_map(y, grad, |v, g| g * (T::one() - v * v))
            }
            Layer::Sigmoid { output } => {
                let y = output.as_ref().ok_or_else(missing_cache)?;
                zip_map(y, grad, |v, g| g * v * (T::one() - v))
            }
            Layer::Softmax { output } => {
                let y = output.as_ref().ok_or_else(missing_cache)?;
                let mut dx = grad.clone();
                let k = y.sample_len();
                for (d, yr) in dx.data_mut().chunks_mut(k).zip(y.data().chunks(k)) {
                    softmax_backward_row(yr, d);
                }
                dx
            }
            Layer::AuxHeads { output } => {
                let y = output.as_ref().ok_or_else(missing_cache)?;
                let mut dx = grad.clone();
                let k = y.sample_len();
                for (d, yr) in dx.data_mut().chunks_mut(k).zip(y.data().chunks(k)) {
                    d[0] = d[0] * yr[0] * (T::one() - yr[0]);
                    softmax_backward_row(&yr[1..], &mut d[1..]);
                }
                dx
            }
            Layer::Dropout { mask, .. } => match mask {
                Some(m) => {
                    let mut dx = grad.clone();
                    dx.data_mut().iter_mut().zip(m.iter()).for_each(|(g, &k)| *g = *g * k);
                    dx
                }
                None => grad.clone(),
            },
        };
        Ok(need_input.then_some(out))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv2d(l) => l.params_mut(),
            Layer::ConvTranspose2d(l) => l.params_mut(),
            Layer::Dense(l) => l.params_mut(),
            Layer::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta],
            Layer::Embedding(l) => vec![&mut l.table],
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv2d(l) => l.params(),
            Layer::ConvTranspose2d(l) => l.params(),
            Layer::Dense(l) => l.params(),
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta],
            Layer::Embedding(l) => vec![&l.table],
            _ => Vec::new(),
        }
    }

    /// Every tensor that is persisted: trainable parameters plus running statistics.
    pub fn state_tensors(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta, &l.running_mean, &l.running_var],
            _ => self.params(),
        }
    }

    /// Integer hyperparameters (floats stored as `f32` bit patterns).
    pub fn config(&self) -> Vec<u32> {
        match self {
            Layer::Conv2d(l) => vec![l.stride as u32, l.padding as u32],
            Layer::ConvTranspose2d(l) => vec![l.stride as u32, l.padding as u32],
            Layer::MaxPool2d(l) => vec![l.size as u32, l.stride as u32],
            Layer::UpsampleNearest(l) => vec![l.factor as u32],
            Layer::Reshape { shape, .. } => shape.iter().map(|&d| d as u32).collect(),
            Layer::LeakyRelu { alpha, .. } => vec![(*alpha as f32).to_bits()],
            Layer::Dropout { rate, .. } => vec![(*rate as f32).to_bits()],
            Layer::Embedding(l) => vec![u32::from(l.mode == EmbedMode::Concat)],
            _ => Vec::new(),
        }
    }

    /// Rebuilds a layer from its checkpoint record, validating tensor shapes.
    pub fn from_record(kind: LayerKind, config: &[u32], tensors: Vec<Tensor<T>>) -> Result<Self> {
        let n_tensors = tensors.len();
        let want = |n_cfg: usize, n_t: usize| -> Result<()> {
            if config.len() != n_cfg || n_tensors != n_t {
                return Err(Error::format(
                    "checkpoint",
                    format!(
                        "{kind} record has {} config values and {} tensors, expected {n_cfg} and {n_t}",
                        config.len(),
                        n_tensors
                    ),
                ));
            }
            Ok(())
        };
        let f32cfg = |i: usize| f32::from_bits(config[i]) as f64;
        let mut it = tensors.into_iter();
        let mut next = || it.next().expect("tensor count checked");
        Ok(match kind {
            LayerKind::Conv2d => {
                want(2, 2)?;
                Layer::Conv2d(Conv2d::from_parts(config[0] as usize, config[1] as usize, next(), next())?)
            }
            LayerKind::ConvTranspose2d => {
                want(2, 2)?;
                Layer::ConvTranspose2d(ConvTranspose2d::from_parts(config[0] as usize, config[1] as usize, next(), next())?)
            }
            LayerKind::Dense => {
                want(0, 2)?;
                Layer::Dense(Dense::from_parts(next(), next())?)
            }
            LayerKind::MaxPool2d => {
                want(2, 0)?;
                Layer::MaxPool2d(MaxPool2d::new(config[0] as usize, config[1] as usize))
            }
            LayerKind::UpsampleNearest => {
                want(1, 0)?;
                Layer::UpsampleNearest(UpsampleNearest::new(config[0] as usize))
            }
            LayerKind::Flatten => {
                want(0, 0)?;
                Layer::flatten()
            }
            LayerKind::Reshape => {
                want(config.len(), 0)?;
                Layer::reshape(&config.iter().map(|&d| d as usize).collect::<Vec<_>>())
            }
            LayerKind::Relu => {
                want(0, 0)?;
                Layer::relu()
            }
            LayerKind::LeakyRelu => {
                want(1, 0)?;
                Layer::leaky_relu(f32cfg(0))
            }
            LayerKind::Tanh => {
                want(0, 0)?;
                Layer::tanh()
            }
            LayerKind::Sigmoid => {
                want(0, 0)?;
                Layer::sigmoid()
            }
            LayerKind::Softmax => {
                want(0, 0)?;
                Layer::softmax()
            }
            LayerKind::AuxHeads => {
                want(0, 0)?;
                Layer::aux_heads()
            }
            LayerKind::Dropout => {
                want(1, 0)?;
                Layer::dropout(f32cfg(0))
            }
            LayerKind::BatchNorm => {
                want(0, 4)?;
                Layer::BatchNorm(BatchNorm::from_parts(next(), next(), next(), next())?)
            }
            LayerKind::Embedding => {
                // older records carry no mode and multiply
                let mode = match config {
                    [] => EmbedMode::Multiply,
                    [0] => EmbedMode::Multiply,
                    [1] => EmbedMode::Concat,
                    _ => return Err(Error::format("checkpoint", format!("bad embedding config {config:?}"))),
                };
                want(config.len(), 1)?;
                Layer::Embedding(LabelEmbedding::from_parts(next(), mode)?)
            }
        })
    }

    pub fn cast<U: Scalar>(&self) -> Result<Layer<U>> {
        let tensors = self.state_tensors().into_iter().map(|t| t.cast()).collect();
        Layer::from_record(self.kind(), &self.config(), tensors).map(|l| match (self, l) {
            // keep full-precision hyperparameters that the record stores as f32
            (Layer::LeakyRelu { alpha, .. }, Layer::LeakyRelu { input, .. }) => Layer::LeakyRelu { alpha: *alpha, input },
            (Layer::Dropout { rate, .. }, Layer::Dropout { mask, .. }) => Layer::Dropout { rate: *rate, mask },
            (_, l) => l,
        })
    }
}

fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    row.iter_mut().for_each(|v| *v = *v / sum);
}

fn softmax_backward_row<T: Scalar>(y: &[T], g: &mut [T]) {
    let dot = y.iter().zip(g.iter()).fold(T::zero(), |a, (&yi, &gi)| a + yi * gi);
    g.iter_mut().zip(y).for_each(|(gi, &yi)| *gi = yi * (*gi - dot));
}

fn map<T: Scalar>(x: &Tensor<T>, f: impl Fn(T) -> T) -> Tensor<T> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = f(*v));
    y
}

fn zip_map<T: Scalar>(a: &Tensor<T>, g: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let mut out = g.clone();
    out.data_mut()
        .iter_mut()
        .zip(a.data())
        .for_each(|(gv, &av)| *gv = f(av, *gv));
    out
}

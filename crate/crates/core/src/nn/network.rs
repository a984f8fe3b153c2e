use crate::error::{Error, Result};
use crate::nn::conv::{Conv2d, ConvTranspose2d};
use crate::nn::dense::{Dense, EmbedMode, LabelEmbedding};
use crate::nn::init::Init;
use crate::nn::layer::{ForwardCtx, Layer};
use crate::nn::norm::BatchNorm;
use crate::nn::pool::{MaxPool2d, UpsampleNearest};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;
use crate::rng::{derive_seed, rng_from_seed, stream_rng, Rng, STREAM_DROPOUT, STREAM_INIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

/// Ordered layer stack with a fixed per-sample input shape.
///
/// The dropout RNG is owned by the network, so a fixed seed reproduces the
/// exact training trajectory.
#[derive(Clone, Debug)]
pub struct Network<T> {
    input_shape: Vec<usize>,
    layers: Vec<Layer<T>>,
    mode: Mode,
    rng: Rng,
}

impl<T: Scalar> Network<T> {
    /// Validates that the layer shapes compose starting from `input_shape`.
    pub fn new(input_shape: &[usize], layers: Vec<Layer<T>>, seed: u64) -> Result<Self> {
        let net = Self {
            input_shape: input_shape.to_vec(),
            layers,
            mode: Mode::Training,
            rng: stream_rng(seed, STREAM_DROPOUT),
        };
        net.shape_trace()?;
        Ok(net)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn reseed_dropout(&mut self, seed: u64) {
        self.rng = stream_rng(seed, STREAM_DROPOUT);
    }

    pub(crate) fn rng_snapshot(&self) -> Rng {
        self.rng.clone()
    }

    pub(crate) fn restore_rng(&mut self, rng: Rng) {
        self.rng = rng;
    }

    /// Per-sample output shape after every layer, from the static shape rules.
    pub fn shape_trace(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = self.input_shape.clone();
        let mut trace = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer.output_shape(&shape).map_err(|e| {
                Error::shape(format!("layer {i} ({}): {e}", layer.kind()))
            })?;
            trace.push(shape.clone());
        }
        Ok(trace)
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.shape_trace()
            .ok()
            .and_then(|t| t.last().cloned())
            .unwrap_or_else(|| self.input_shape.clone())
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward_labeled(x, None)
    }

    /// Forward pass; `labels` feeds any label-embedding layer.
    pub fn forward_labeled(&mut self, x: &Tensor<T>, labels: Option<&[usize]>) -> Result<Tensor<T>> {
        if x.shape().len() != self.input_shape.len() + 1 || x.shape()[1..] != self.input_shape[..] {
            return Err(Error::shape(format!(
                "network input must be [N, {:?}], got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        let mut ctx = ForwardCtx {
            training: self.mode == Mode::Training,
            rng: &mut self.rng,
            labels,
        };
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, &mut ctx)?;
        }
        Ok(cur)
    }

    /// Full reverse pass from the gradient w.r.t. the network output; returns the
    /// gradient w.r.t. the network input.
    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.layers.len();
        self.backward_range(n, grad, true)
            .map(|g| g.expect("input gradient requested"))
    }

    /// Reverse pass that skips the first layer's input gradient.
    pub fn backward_params(&mut self, grad: &Tensor<T>) -> Result<()> {
        let n = self.layers.len();
        self.backward_range(n, grad, false).map(|_| ())
    }

    /// Reverse pass starting *below* the final output activation, with `grad`
    /// taken w.r.t. that activation's input (the logits). Used with the fused
    /// softmax/sigmoid cross-entropy gradients in [`loss`](crate::nn::loss).
    pub fn backward_from_logits(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        match self.layers.last() {
            Some(l) if l.is_output_activation() => {}
            _ => {
                return Err(Error::invalid(
                    "backward_from_logits needs a softmax/sigmoid/aux_heads output layer",
                ))
            }
        }
        let n = self.layers.len() - 1;
        self.backward_range(n, grad, need_input)
    }

    fn backward_range(&mut self, end: usize, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let mut cur = grad.clone();
        for i in (0..end).rev() {
            let want_input = need_input || i > 0;
            match self.layers[i].backward(&cur, want_input) {
                Ok(Some(g)) => cur = g,
                Ok(None) => return Ok(None),
                Err(Error::NoForwardCache(_)) => return Err(Error::NoForwardCache(i)),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(cur))
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// All trainable tensors in layer order; each appears exactly once.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// FNV-1a hash over every persisted tensor's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for layer in &self.layers {
            for t in layer.state_tensors() {
                for v in t.data() {
                    for b in v.as_f64().to_bits().to_le_bytes() {
                        h ^= b as u64;
                        h = h.wrapping_mul(0x0100_0000_01b3);
                    }
                }
            }
        }
        h
    }

    /// Converts to another precision, dropping caches.
    pub fn cast<U: Scalar>(&self) -> Result<Network<U>> {
        let layers = self.layers.iter().map(|l| l.cast()).collect::<Result<Vec<_>>>()?;
        Ok(Network {
            input_shape: self.input_shape.clone(),
            layers,
            mode: self.mode,
            rng: self.rng.clone(),
        })
    }

    pub(crate) fn from_layers_unchecked(input_shape: Vec<usize>, layers: Vec<Layer<T>>) -> Result<Self> {
        Network::new(&input_shape, layers, 0)
    }
}

/// Shape-tracking builder; every step validates against the running shape.
pub struct NetworkBuilder<T> {
    input_shape: Vec<usize>,
    shape: Vec<usize>,
    layers: Vec<Layer<T>>,
    rng: Rng,
    seed: u64,
    error: Option<Error>,
}

impl<T: Scalar> NetworkBuilder<T> {
    pub fn new(input_shape: &[usize], seed: u64) -> Self {
        Self {
            input_shape: input_shape.to_vec(),
            shape: input_shape.to_vec(),
            layers: Vec::new(),
            rng: rng_from_seed(derive_seed(seed, STREAM_INIT)),
            seed,
            error: None,
        }
    }

    pub fn current_shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn push(mut self, layer: Layer<T>) -> Self {
        if self.error.is_some() {
            return self;
        }
        match layer.output_shape(&self.shape) {
            Ok(s) => {
                self.shape = s;
                self.layers.push(layer);
            }
            Err(e) => {
                self.error = Some(Error::shape(format!(
                    "layer {} ({}): {e}",
                    self.layers.len(),
                    layer.kind()
                )))
            }
        }
        self
    }

    fn channels(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn conv2d(mut self, filters: usize, kernel: usize, stride: usize, padding: usize, init: Init) -> Self {
        let l = Conv2d::new(self.channels(), filters, kernel, stride, padding, init, &mut self.rng);
        self.push(Layer::Conv2d(l))
    }

    pub fn conv2d_transpose(mut self, filters: usize, kernel: usize, stride: usize, padding: usize, init: Init) -> Self {
        let l = ConvTranspose2d::new(self.channels(), filters, kernel, stride, padding, init, &mut self.rng);
        self.push(Layer::ConvTranspose2d(l))
    }

    pub fn dense(mut self, outputs: usize, init: Init) -> Self {
        let inputs = if self.shape.len() == 1 { self.shape[0] } else { 0 };
        let l = Dense::new(inputs, outputs, init, &mut self.rng);
        self.push(Layer::Dense(l))
    }

    pub fn embedding(self, classes: usize) -> Self {
        self.embedding_with(classes, EmbedMode::Multiply)
    }

    pub fn embedding_with(mut self, classes: usize, mode: EmbedMode) -> Self {
        let dim = if self.shape.len() == 1 { self.shape[0] } else { 0 };
        let l = LabelEmbedding::new(classes, dim, mode, &mut self.rng);
        self.push(Layer::Embedding(l))
    }

    pub fn batch_norm(self) -> Self {
        let c = self.channels();
        self.push(Layer::BatchNorm(BatchNorm::new(c)))
    }

    pub fn max_pool(self, size: usize, stride: usize) -> Self {
        self.push(Layer::MaxPool2d(MaxPool2d::new(size, stride)))
    }

    pub fn upsample(self, factor: usize) -> Self {
        self.push(Layer::UpsampleNearest(UpsampleNearest::new(factor)))
    }

    pub fn flatten(self) -> Self {
        self.push(Layer::flatten())
    }

    pub fn reshape(self, shape: &[usize]) -> Self {
        self.push(Layer::reshape(shape))
    }

    pub fn relu(self) -> Self {
        self.push(Layer::relu())
    }

    pub fn leaky_relu(self, alpha: f64) -> Self {
        self.push(Layer::leaky_relu(alpha))
    }

    pub fn tanh(self) -> Self {
        self.push(Layer::tanh())
    }

    pub fn sigmoid(self) -> Self {
        self.push(Layer::sigmoid())
    }

    pub fn softmax(self) -> Self {
        self.push(Layer::softmax())
    }

    pub fn aux_heads(self) -> Self {
        self.push(Layer::aux_heads())
    }

    pub fn dropout(self, rate: f64) -> Self {
        self.push(Layer::dropout(rate))
    }

    pub fn build(self) -> Result<Network<T>> {
        if let Some(e) = self.error {
            return Err(e);
        }
        Network::new(&self.input_shape, self.layers, self.seed)
    }
}

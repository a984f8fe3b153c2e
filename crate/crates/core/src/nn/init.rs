use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;

/// Weight initialisation schemes. Biases always start at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform in `±sqrt(6 / fan_in)`, for (leaky) ReLU layers.
    He,
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, for tanh/sigmoid/softmax heads.
    Glorot,
    /// Gaussian with the given standard deviation.
    Normal(f64),
}

pub(crate) fn init_tensor<T: Scalar>(t: &mut Tensor<T>, init: Init, fan_in: usize, fan_out: usize, rng: &mut Rng) {
    match init {
        Init::He | Init::Glorot => {
            let limit = match init {
                Init::He => (6.0 / fan_in.max(1) as f64).sqrt(),
                _ => (6.0 / (fan_in + fan_out).max(1) as f64).sqrt(),
            };
            for v in t.data_mut() {
                *v = T::from_f64_lossy(rng.random_range(-limit..limit));
            }
        }
        Init::Normal(std) => {
            for v in t.data_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v = T::from_f64_lossy(z * std);
            }
        }
    }
}

use crate::error::{Error, Result};
use crate::nn::layer::missing_cache;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Batch normalisation over the channel axis (axis 1) of `[N, C]` or
/// `[N, C, H, W]` input. Training mode uses batch statistics and updates the
/// running averages; inference mode uses the running averages.
#[derive(Clone, Debug)]
pub struct BatchNorm<T> {
    pub features: usize,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    cache: Option<BnCache<T>>,
}

#[derive(Clone, Debug)]
struct BnCache<T> {
    x_hat: Vec<T>,
    inv_std: Vec<T>,
    shape: Vec<usize>,
    training: bool,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(features: usize) -> Self {
        let mut gamma = Tensor::param(&[features]);
        gamma.data_mut().iter_mut().for_each(|v| *v = T::one());
        let mut running_var = Tensor::zeros(&[features]);
        running_var.data_mut().iter_mut().for_each(|v| *v = T::one());
        Self {
            features,
            gamma,
            beta: Tensor::param(&[features]),
            running_mean: Tensor::zeros(&[features]),
            running_var,
            cache: None,
        }
    }

    pub(crate) fn from_parts(gamma: Tensor<T>, beta: Tensor<T>, running_mean: Tensor<T>, running_var: Tensor<T>) -> Result<Self> {
        let f = gamma.len();
        if [&gamma, &beta, &running_mean, &running_var]
            .iter()
            .any(|t| t.shape() != [f])
        {
            return Err(Error::shape("batch_norm parameter shapes disagree"));
        }
        let (mut gamma, mut beta) = (gamma, beta);
        gamma.grad_mut();
        beta.grad_mut();
        Ok(Self {
            features: f,
            gamma,
            beta,
            running_mean,
            running_var,
            cache: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if !(input.len() == 1 || input.len() == 3) || input[0] != self.features {
            return Err(Error::shape(format!(
                "batch_norm over {} features got {input:?}",
                self.features
            )));
        }
        Ok(input.to_vec())
    }

    pub fn forward(&mut self, x: &Tensor<T>, training: bool) -> Result<Tensor<T>> {
        self.output_shape(&x.shape()[1..])?;
        let n = x.batch();
        let c = self.features;
        let spatial = x.sample_len() / c;
        let m = n * spatial;
        let src = x.data();
        let at = |b: usize, ch: usize, s: usize| (b * c + ch) * spatial + s;

        let (mean, var): (Vec<f64>, Vec<f64>) = if training {
            if m < 2 {
                return Err(Error::shape("batch_norm training needs >= 2 values per channel"));
            }
            (0..c)
                .map(|ch| {
                    let mut sum = 0.0;
                    for b in 0..n {
                        for s in 0..spatial {
                            sum += src[at(b, ch, s)].as_f64();
                        }
                    }
                    let mean = sum / m as f64;
                    let mut sq = 0.0;
                    for b in 0..n {
                        for s in 0..spatial {
                            let d = src[at(b, ch, s)].as_f64() - mean;
                            sq += d * d;
                        }
                    }
                    (mean, sq / m as f64)
                })
                .unzip()
        } else {
            (
                self.running_mean.data().iter().map(|v| v.as_f64()).collect(),
                self.running_var.data().iter().map(|v| v.as_f64()).collect(),
            )
        };

        if training {
            let unbias = m as f64 / (m - 1) as f64;
            for ch in 0..c {
                let rm = &mut self.running_mean.data_mut()[ch];
                *rm = T::from_f64_lossy((1.0 - BN_MOMENTUM) * rm.as_f64() + BN_MOMENTUM * mean[ch]);
                let rv = &mut self.running_var.data_mut()[ch];
                *rv = T::from_f64_lossy((1.0 - BN_MOMENTUM) * rv.as_f64() + BN_MOMENTUM * var[ch] * unbias);
            }
        }

        let inv_std: Vec<T> = var
            .iter()
            .map(|v| T::from_f64_lossy(1.0 / (v + BN_EPS).sqrt()))
            .collect();
        let mean_t: Vec<T> = mean.iter().map(|&v| T::from_f64_lossy(v)).collect();
        let mut x_hat = vec![T::zero(); x.len()];
        let mut out = Tensor::zeros(x.shape());
        let (g, bt) = (self.gamma.data(), self.beta.data());
        for b in 0..n {
            for ch in 0..c {
                for s in 0..spatial {
                    let i = at(b, ch, s);
                    let xh = (src[i] - mean_t[ch]) * inv_std[ch];
                    x_hat[i] = xh;
                    out.data_mut()[i] = g[ch] * xh + bt[ch];
                }
            }
        }
        self.cache = Some(BnCache {
            x_hat,
            inv_std,
            shape: x.shape().to_vec(),
            training,
        });
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>, need_input: bool) -> Result<Option<Tensor<T>>> {
        let cache = self.cache.as_ref().ok_or_else(missing_cache)?;
        let c = self.features;
        let n = cache.shape[0];
        let spatial = cache.x_hat.len() / (n * c);
        let m = T::from_usize(n * spatial).expect("count");
        let at = |b: usize, ch: usize, s: usize| (b * c + ch) * spatial + s;
        let gd = grad.data();

        let mut sum_g = vec![T::zero(); c];
        let mut sum_gx = vec![T::zero(); c];
        for b in 0..n {
            for ch in 0..c {
                for s in 0..spatial {
                    let i = at(b, ch, s);
                    sum_g[ch] = sum_g[ch] + gd[i];
                    sum_gx[ch] = sum_gx[ch] + gd[i] * cache.x_hat[i];
                }
            }
        }
        {
            let dg = self.gamma.grad_mut();
            for ch in 0..c {
                dg[ch] = dg[ch] + sum_gx[ch];
            }
        }
        {
            let db = self.beta.grad_mut();
            for ch in 0..c {
                db[ch] = db[ch] + sum_g[ch];
            }
        }
        if !need_input {
            return Ok(None);
        }
        let gamma = self.gamma.data();
        let mut dx = Tensor::zeros(&cache.shape);
        let d = dx.data_mut();
        for b in 0..n {
            for ch in 0..c {
                let k = gamma[ch] * cache.inv_std[ch];
                for s in 0..spatial {
                    let i = at(b, ch, s);
                    d[i] = if cache.training {
                        k * (gd[i] - sum_g[ch] / m - cache.x_hat[i] * sum_gx[ch] / m)
                    } else {
                        k * gd[i]
                    };
                }
            }
        }
        Ok(Some(dx))
    }
}

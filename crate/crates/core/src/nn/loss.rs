//! Batch-mean cross-entropy losses and their gradients.
//!
//! Loss values clip probabilities into `[1e-7, 1 - 1e-7]`. The `*_logit_grad`
//! helpers return the fused gradient w.r.t. the pre-activation logits,
//! `(p - t) / N`, which is the exact derivative of cross-entropy composed with
//! softmax (or sigmoid) and avoids dividing by tiny probabilities.

use crate::error::{Error, Result};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

pub const PROB_CLIP: f64 = 1e-7;

fn clip(p: f64) -> f64 {
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

pub fn one_hot<T: Scalar>(labels: &[usize], classes: usize) -> Result<Tensor<T>> {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (n, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::invalid(format!("label {l} >= {classes}")));
        }
        t.data_mut()[n * classes + l] = T::one();
    }
    Ok(t)
}

fn check_same<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() || a.shape().len() != 2 {
        return Err(Error::shape(format!(
            "loss inputs {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Mean over the batch of `-sum_k t_k ln p_k`.
pub fn categorical_crossentropy<T: Scalar>(probs: &Tensor<T>, one_hot: &Tensor<T>) -> Result<f64> {
    check_same(probs, one_hot)?;
    let n = probs.batch().max(1) as f64;
    let total: f64 = probs
        .data()
        .iter()
        .zip(one_hot.data())
        .map(|(&p, &t)| -t.as_f64() * clip(p.as_f64()).ln())
        .sum();
    Ok(total / n)
}

/// Mean of `-(t ln p + (1 - t) ln(1 - p))`.
pub fn binary_crossentropy<T: Scalar>(p: &[T], target: &[T]) -> Result<f64> {
    if p.len() != target.len() {
        return Err(Error::shape(format!("{} predictions vs {} targets", p.len(), target.len())));
    }
    let n = p.len().max(1) as f64;
    let total: f64 = p
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let (p, t) = (clip(p.as_f64()), t.as_f64());
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / n)
}

/// Gradient of [`categorical_crossentropy`] w.r.t. the softmax logits.
pub fn softmax_crossentropy_logit_grad<T: Scalar>(probs: &Tensor<T>, one_hot: &Tensor<T>) -> Result<Tensor<T>> {
    check_same(probs, one_hot)?;
    let inv_n = T::from_f64_lossy(1.0 / probs.batch().max(1) as f64);
    let mut g = probs.clone();
    g.data_mut()
        .iter_mut()
        .zip(one_hot.data())
        .for_each(|(p, &t)| *p = (*p - t) * inv_n);
    Ok(g)
}

/// Gradient of [`categorical_crossentropy`] w.r.t. the probabilities themselves.
pub fn categorical_crossentropy_prob_grad<T: Scalar>(probs: &Tensor<T>, one_hot: &Tensor<T>) -> Result<Tensor<T>> {
    check_same(probs, one_hot)?;
    let n = probs.batch().max(1) as f64;
    let mut g = probs.clone();
    g.data_mut().iter_mut().zip(one_hot.data()).for_each(|(p, &t)| {
        *p = T::from_f64_lossy(-t.as_f64() / (p.as_f64().max(f64::MIN_POSITIVE) * n))
    });
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_near_zero() {
        let t = one_hot::<f64>(&[2, 0], 3).unwrap();
        assert!(categorical_crossentropy(&t, &t).unwrap() <= 1e-6);
    }

    #[test]
    fn uniform_six_class_is_ln6() {
        let p = Tensor::from_vec(&[2, 6], vec![1.0 / 6.0; 12]).unwrap();
        let t = one_hot::<f64>(&[1, 4], 6).unwrap();
        let l = categorical_crossentropy(&p, &t).unwrap();
        assert!((l - 6f64.ln()).abs() < 1e-12);
        assert!((l - 1.7918).abs() < 1e-4);
    }

    #[test]
    fn binary_half_is_ln2() {
        let l = binary_crossentropy(&[0.5f64, 0.5], &[0.5, 0.5]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
        assert!((l - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn mismatch_rejected() {
        let p = Tensor::<f32>::zeros(&[2, 3]);
        let t = Tensor::<f32>::zeros(&[2, 4]);
        assert!(categorical_crossentropy(&p, &t).is_err());
        assert!(binary_crossentropy(&[0.1f32], &[0.0, 1.0]).is_err());
        assert!(one_hot::<f32>(&[3], 3).is_err());
    }
}

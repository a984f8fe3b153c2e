//! Central-difference gradient verification in 64-bit precision.
//!
//! The scalar objective is `L = sum(y * R)` for a fixed random projection `R`,
//! so the analytic input to `backward` is exactly `R`.

use rand::Rng as _;

use crate::error::Result;
use crate::nn::layer::Layer;
use crate::nn::network::Network;
use crate::nn::tensor::Tensor;
use crate::rng::rng_from_seed;

pub const FD_EPS: f64 = 1e-5;
/// Denominator floor for the relative error, so that near-zero gradients are
/// judged on absolute error instead.
pub const REL_ERR_FLOOR: f64 = 1e-6;
const MAX_COORDS_PER_TENSOR: usize = 400;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_param_error: f64,
    pub max_input_error: f64,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.max_param_error.max(self.max_input_error)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error() < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Random input whose entries have magnitude in `[0.1, 1]`, keeping
/// piecewise-linear activations away from their kink.
pub fn sample_input(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = rng_from_seed(seed);
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag = rng.random_range(0.1..1.0);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::from_vec(shape, data).expect("shape product")
}

/// Checks a single layer on a random batch of `input_shape` (batch dim first).
pub fn finite_diff_check(layer: Layer<f64>, input_shape: &[usize], seed: u64) -> Result<GradCheckReport> {
    let labels: Vec<usize> = match &layer {
        Layer::Embedding(e) => (0..input_shape[0]).map(|i| i % e.classes).collect(),
        _ => Vec::new(),
    };
    let mut net = Network::new(&input_shape[1..], vec![layer], seed)?;
    let x = sample_input(input_shape, seed ^ 0x5eed);
    let labels = (!labels.is_empty()).then_some(labels.as_slice());
    finite_diff_check_network(&mut net, &x, labels, seed)
}

/// Checks every parameter tensor and the input gradient of a whole network.
pub fn finite_diff_check_network(
    net: &mut Network<f64>,
    x: &Tensor<f64>,
    labels: Option<&[usize]>,
    seed: u64,
) -> Result<GradCheckReport> {
    let rng0 = net.rng_snapshot();
    let eval = |net: &mut Network<f64>, x: &Tensor<f64>, r: &Tensor<f64>| -> Result<f64> {
        net.restore_rng(rng0.clone());
        let y = net.forward_labeled(x, labels)?;
        Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
    };

    net.restore_rng(rng0.clone());
    let y = net.forward_labeled(x, labels)?;
    let r = sample_input(y.shape(), seed ^ 0xabcd);
    net.zero_grad();
    let dx = net.backward(&r)?;

    let mut report = GradCheckReport::default();

    let n_params = net.params().len();
    for pi in 0..n_params {
        let analytic: Vec<f64> = net.params()[pi].grad().expect("param grad").to_vec();
        let len = analytic.len();
        let step = len.div_ceil(MAX_COORDS_PER_TENSOR).max(1);
        for i in (0..len).step_by(step) {
            let orig = net.params()[pi].data()[i];
            net.params_mut()[pi].data_mut()[i] = orig + FD_EPS;
            let lp = eval(net, x, &r)?;
            net.params_mut()[pi].data_mut()[i] = orig - FD_EPS;
            let lm = eval(net, x, &r)?;
            net.params_mut()[pi].data_mut()[i] = orig;
            let numeric = (lp - lm) / (2.0 * FD_EPS);
            report.max_param_error = report.max_param_error.max(relative_error(analytic[i], numeric));
            report.coords_checked += 1;
        }
    }

    let mut xp = x.clone();
    let step = x.len().div_ceil(MAX_COORDS_PER_TENSOR).max(1);
    for i in (0..x.len()).step_by(step) {
        let orig = x.data()[i];
        xp.data_mut()[i] = orig + FD_EPS;
        let lp = eval(net, &xp, &r)?;
        xp.data_mut()[i] = orig - FD_EPS;
        let lm = eval(net, &xp, &r)?;
        xp.data_mut()[i] = orig;
        let numeric = (lp - lm) / (2.0 * FD_EPS);
        report.max_input_error = report.max_input_error.max(relative_error(dx.data()[i], numeric));
        report.coords_checked += 1;
    }
    Ok(report)
}

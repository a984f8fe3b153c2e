//! Auxiliary-classifier GAN: label-conditioned generator, two-headed
//! discriminator, adversarial training loop, sampling and quality probes.
//!
//! The generator works in `[-1, 1]` (tanh); images handed out by [`generate`]
//! are mapped to `[0, 1]`. Real images are mapped the other way before they
//! reach the discriminator.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::classifier::predict_all;
use crate::dataset::{csv_err, LabeledDataset};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::nn::loss::{binary_crossentropy, categorical_crossentropy, one_hot};
use crate::nn::{Adam, AdamConfig, EmbedMode, Init, Layer, Mode, Network, NetworkBuilder, Tensor};
use crate::rng::{derive_seed, rng_from_seed, stream_rng, Rng, STREAM_BATCH, STREAM_DROPOUT, STREAM_LATENT};

const GEN_STREAM: u64 = 0x4745_4e45;
const DISC_STREAM: u64 = 0x4449_5343;
const SNAPSHOT_STREAM: u64 = 0x534e_4150;
const GEN_BATCH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct GanSpec {
    pub latent_dim: usize,
    pub classes: usize,
    /// How the label embedding meets the latent vector.
    pub conditioning: EmbedMode,
    /// `(height, width)`; both must be multiples of 4.
    pub image: (usize, usize),
    /// Channels of the dense feature map and of the two upsampling blocks.
    pub g_channels: [usize; 3],
    /// Filters of the stride-2 discriminator blocks.
    pub d_channels: Vec<usize>,
    pub d_dropout: f64,
    pub leaky_slope: f64,
}

impl GanSpec {
    /// Six shape classes on a square canvas. Canvases above 32 px get a
    /// narrower generator so the per-step cost stays comparable.
    pub fn shapes(size: usize) -> Self {
        Self {
            latent_dim: 100,
            classes: 6,
            conditioning: EmbedMode::Multiply,
            image: (size, size),
            g_channels: if size <= 32 { [256, 64, 32] } else { [128, 32, 16] },
            d_channels: vec![16, 32, 64],
            d_dropout: 0.25,
            leaky_slope: 0.2,
        }
    }

    /// Five performance labels on the 32x72 facade raster.
    pub fn facade() -> Self {
        Self {
            latent_dim: 100,
            classes: 5,
            conditioning: EmbedMode::Concat,
            image: (32, 72),
            g_channels: [32, 32, 8],
            d_channels: vec![16, 32, 64],
            d_dropout: 0.25,
            leaky_slope: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.image;
        if self.classes < 2 {
            return Err(Error::invalid("GAN needs at least 2 classes"));
        }
        if self.latent_dim == 0 || self.g_channels.contains(&0) || self.d_channels.contains(&0) {
            return Err(Error::invalid("GAN widths must be positive"));
        }
        if h < 4 || w < 4 || h % 4 != 0 || w % 4 != 0 {
            return Err(Error::invalid(format!(
                "two 2x upsamplings cannot reach {h}x{w}; both sides must be multiples of 4"
            )));
        }
        if self.d_channels.is_empty() || !(0.0..1.0).contains(&self.d_dropout) {
            return Err(Error::invalid("discriminator needs >= 1 block and dropout in [0, 1)"));
        }
        Ok(())
    }
}

/// label embedding (multiplied or concatenated) -> dense -> reshape -> 2x (upsample, conv, BN, leaky)
/// -> conv to 1 channel -> tanh.
pub fn build_generator(spec: &GanSpec, seed: u64) -> Result<Network<f32>> {
    spec.validate()?;
    let (h0, w0) = (spec.image.0 / 4, spec.image.1 / 4);
    let [c0, c1, c2] = spec.g_channels;
    let a = spec.leaky_slope;
    NetworkBuilder::new(&[spec.latent_dim], seed)
        .embedding_with(spec.classes, spec.conditioning)
        .dense(c0 * h0 * w0, Init::He)
        .leaky_relu(a)
        .reshape(&[c0, h0, w0])
        .upsample(2)
        .conv2d(c1, 3, 1, 1, Init::He)
        .batch_norm()
        .leaky_relu(a)
        .upsample(2)
        .conv2d(c2, 3, 1, 1, Init::He)
        .batch_norm()
        .leaky_relu(a)
        .conv2d(1, 3, 1, 1, Init::Glorot)
        .tanh()
        .build()
}

/// Stride-2 conv blocks with leaky ReLU and dropout, then one dense layer
/// feeding the validity (sigmoid) and class (softmax) heads.
pub fn build_discriminator(spec: &GanSpec, seed: u64) -> Result<Network<f32>> {
    spec.validate()?;
    let mut b = NetworkBuilder::new(&[1, spec.image.0, spec.image.1], seed);
    for &f in &spec.d_channels {
        b = b.conv2d(f, 3, 2, 1, Init::He).leaky_relu(spec.leaky_slope);
        if spec.d_dropout > 0.0 {
            b = b.dropout(spec.d_dropout);
        }
    }
    let mut net = b.flatten().dense(1 + spec.classes, Init::Glorot).aux_heads().build()?;
    net.reseed_dropout(derive_seed(seed, STREAM_DROPOUT));
    Ok(net)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GanTrainConfig {
    /// Generator update steps.
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Steps between snapshot sheets; 0 disables them.
    pub snapshot_interval: usize,
    pub snapshot_per_label: usize,
    /// Validity target for real images in the discriminator update.
    pub real_target: f64,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            batch_size: 32,
            seed: 42,
            adam: AdamConfig::GAN,
            snapshot_interval: 250,
            snapshot_per_label: 8,
            real_target: 0.9,
        }
    }
}

impl GanTrainConfig {
    /// 12,000 steps at batch 5 with a lower learning rate, which keeps the
    /// per-label outputs from drifting together over the long run.
    pub fn facade() -> Self {
        Self {
            steps: 12_000,
            batch_size: 5,
            adam: AdamConfig { lr: 5e-5, ..AdamConfig::GAN },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::invalid("steps and batch_size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.real_target) {
            return Err(Error::invalid("real validity target must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GanRecord {
    pub step: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub d_acc_real: f64,
    pub d_acc_fake: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GanHistory {
    pub records: Vec<GanRecord>,
}

impl GanHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&GanRecord> {
        self.records.last()
    }

    pub fn all_finite(&self) -> bool {
        self.records.iter().all(|r| {
            [r.d_loss, r.g_loss, r.d_acc_real, r.d_acc_fake]
                .iter()
                .all(|v| v.is_finite())
        })
    }

    /// CSV with header `step,d_loss,g_loss,d_acc_real,d_acc_fake`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "d_loss", "g_loss", "d_acc_real", "d_acc_fake"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.step.to_string(),
                format!("{:.6}", r.d_loss),
                format!("{:.6}", r.g_loss),
                format!("{:.4}", r.d_acc_real),
                format!("{:.4}", r.d_acc_fake),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    /// One row per label, `snapshot_per_label` columns.
    pub sheet: ImageGrid,
}

#[derive(Clone, Debug)]
pub struct GanOutcome {
    pub generator: Network<f32>,
    pub discriminator: Network<f32>,
    pub history: GanHistory,
    pub snapshots: Vec<Snapshot>,
    /// Set when a non-finite loss or gradient stopped training early; the
    /// networks are then the last state whose update succeeded.
    pub halted: Option<String>,
}

fn latent_batch(rng: &mut Rng, n: usize, dim: usize) -> Result<Tensor<f32>> {
    let data = (0..n * dim).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
    Tensor::from_vec(&[n, dim], data)
}

fn to_signed(images: &[&ImageGrid]) -> Result<Tensor<f32>> {
    let first = images.first().ok_or_else(|| Error::invalid("empty image batch"))?;
    let (h, w) = (first.height(), first.width());
    let mut data = Vec::with_capacity(images.len() * h * w);
    for im in images {
        data.extend(im.values().iter().map(|v| 2.0 * v - 1.0));
    }
    Tensor::from_vec(&[images.len(), 1, h, w], data)
}

fn to_images(t: &Tensor<f32>) -> Result<Vec<ImageGrid>> {
    let s = t.shape();
    let (h, w) = (s[2], s[3]);
    (0..t.batch())
        .map(|n| {
            let v = t.sample(n).iter().map(|x| (x + 1.0) * 0.5).collect();
            ImageGrid::from_values_clamped(h, w, v)
        })
        .collect()
}

fn concat_batches(a: &Tensor<f32>, b: &Tensor<f32>) -> Result<Tensor<f32>> {
    let mut shape = a.shape().to_vec();
    shape[0] += b.batch();
    let mut data = a.data().to_vec();
    data.extend_from_slice(b.data());
    Tensor::from_vec(&shape, data)
}

struct HeadLoss {
    loss: f64,
    /// Gradient w.r.t. the pre-activation outputs of the two heads.
    grad: Tensor<f32>,
    /// Fraction of rows whose validity lands on the target's side of 0.5.
    hits: Vec<bool>,
}

// Binary cross-entropy on unit 0 plus categorical cross-entropy on the rest,
// both averaged over the batch and summed.
fn head_loss(out: &Tensor<f32>, validity: &[f32], labels: &[usize], classes: usize) -> Result<HeadLoss> {
    let n = out.batch();
    let width = 1 + classes;
    if out.shape() != [n, width] || validity.len() != n || labels.len() != n {
        return Err(Error::shape("discriminator output does not match targets"));
    }
    let mut v = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n * classes);
    for r in 0..n {
        let row = out.sample(r);
        v.push(row[0]);
        probs.extend_from_slice(&row[1..]);
    }
    let probs = Tensor::from_vec(&[n, classes], probs)?;
    let targets = one_hot::<f32>(labels, classes)?;
    let loss = binary_crossentropy(&v, validity)? + categorical_crossentropy(&probs, &targets)?;
    let inv_n = 1.0 / n as f32;
    let mut grad = Tensor::zeros(&[n, width]);
    let g = grad.data_mut();
    for r in 0..n {
        g[r * width] = (v[r] - validity[r]) * inv_n;
        for k in 0..classes {
            g[r * width + 1 + k] = (probs.data()[r * classes + k] - targets.data()[r * classes + k]) * inv_n;
        }
    }
    let hits = v
        .iter()
        .zip(validity)
        .map(|(&p, &t)| (p >= 0.5) == (t >= 0.5))
        .collect();
    Ok(HeadLoss { loss, grad, hits })
}

fn fraction(hits: &[bool]) -> f64 {
    hits.iter().filter(|&&h| h).count() as f64 / hits.len().max(1) as f64
}

fn sheet(generator: &Network<f32>, classes: usize, per_label: usize, latent: &Tensor<f32>) -> Result<ImageGrid> {
    let mut g = generator.clone();
    g.set_mode(Mode::Inference);
    let dim = latent.shape()[1];
    let mut data = Vec::with_capacity(classes * per_label * dim);
    let mut labels = Vec::with_capacity(classes * per_label);
    for c in 0..classes {
        data.extend_from_slice(latent.data());
        labels.extend(std::iter::repeat_n(c, per_label));
    }
    let z = Tensor::from_vec(&[classes * per_label, dim], data)?;
    let out = g.forward_labeled(&z, Some(&labels))?;
    ImageGrid::mosaic(&to_images(&out)?, per_label)
}

fn check_unchanged(name: &str, before: u64, net: &Network<f32>, step: usize) -> Result<()> {
    if net.fingerprint() != before {
        return Err(Error::invalid(format!(
            "step {step}: {name} parameters changed during the other network's update"
        )));
    }
    Ok(())
}

/// Alternating updates: the discriminator on a real batch (targets
/// `real_target`, true class) together with a generated batch (targets 0,
/// conditioned class); then the generator through the discriminator (targets
/// 1, conditioned class). Conditioning labels are drawn uniformly from the
/// classes present in `ds`. Parameter fingerprints of the idle network are
/// compared around each update on the first step and at every snapshot.
pub fn train_acgan(ds: &LabeledDataset, spec: &GanSpec, cfg: &GanTrainConfig) -> Result<GanOutcome> {
    spec.validate()?;
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    if ds.num_classes() != spec.classes {
        return Err(Error::invalid(format!(
            "dataset has {} classes, GAN {}",
            ds.num_classes(),
            spec.classes
        )));
    }
    if ds.image_size() != Some(spec.image) {
        return Err(Error::shape(format!(
            "dataset images {:?} vs GAN canvas {:?}",
            ds.image_size(),
            spec.image
        )));
    }
    let present: Vec<usize> = ds
        .class_counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(c, _)| c)
        .collect();
    if present.len() < spec.classes {
        log::warn!(
            "{} of {} classes have no samples; conditioning only on {present:?}",
            spec.classes - present.len(),
            spec.classes
        );
    }

    let mut gen = build_generator(spec, derive_seed(cfg.seed, GEN_STREAM))?;
    let mut disc = build_discriminator(spec, derive_seed(cfg.seed, DISC_STREAM))?;
    let (mut g_opt, mut d_opt) = (Adam::new(cfg.adam), Adam::new(cfg.adam));
    let mut batch_rng = stream_rng(cfg.seed, STREAM_BATCH);
    let mut latent_rng = stream_rng(cfg.seed, STREAM_LATENT);
    let snap_latent = latent_batch(
        &mut stream_rng(cfg.seed, SNAPSHOT_STREAM),
        cfg.snapshot_per_label.max(1),
        spec.latent_dim,
    )?;

    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut batch_rng);
    let mut cursor = 0;
    let mut history = GanHistory::default();
    let mut snapshots = Vec::new();
    let mut halted = None;
    let n = cfg.batch_size;
    let real_v = vec![cfg.real_target as f32; n];
    let fake_v = vec![0.0f32; n];
    let gen_v = vec![1.0f32; n];

    for step in 1..=cfg.steps {
        let snap_step = cfg.snapshot_interval > 0 && (step % cfg.snapshot_interval == 0 || step == cfg.steps);
        let check = step == 1 || snap_step;

        let mut idx = Vec::with_capacity(n);
        while idx.len() < n {
            if cursor == order.len() {
                order.shuffle(&mut batch_rng);
                cursor = 0;
            }
            idx.push(order[cursor]);
            cursor += 1;
        }
        let real_imgs: Vec<&ImageGrid> = idx.iter().map(|&i| ds.image(i)).collect();
        let real_labels: Vec<usize> = idx.iter().map(|&i| ds.label(i)).collect();
        let real = to_signed(&real_imgs)?;
        let z = latent_batch(&mut latent_rng, n, spec.latent_dim)?;
        let fake_labels: Vec<usize> = (0..n)
            .map(|_| present[batch_rng.random_range(0..present.len())])
            .collect();
        let fake = gen.forward_labeled(&z, Some(&fake_labels))?;

        // Discriminator update.
        let g_print = check.then(|| gen.fingerprint());
        let both = concat_batches(&real, &fake)?;
        let targets_v: Vec<f32> = real_v.iter().chain(&fake_v).copied().collect();
        let labels: Vec<usize> = real_labels.iter().chain(&fake_labels).copied().collect();
        disc.zero_grad();
        let out = disc.forward(&both)?;
        let d = head_loss(&out, &targets_v, &labels, spec.classes)?;
        if !d.loss.is_finite() {
            halted = Some(format!("step {step}: non-finite discriminator loss"));
            break;
        }
        disc.backward_from_logits(&d.grad, false)?;
        if let Err(e) = d_opt.step(&mut disc.params_mut()) {
            halted = Some(format!("step {step}: discriminator update failed: {e}"));
            break;
        }
        if let Some(h) = g_print {
            check_unchanged("generator", h, &gen, step)?;
        }

        // Generator update through the discriminator; only G's optimizer steps.
        let d_print = check.then(|| disc.fingerprint());
        let out = disc.forward(&fake)?;
        let g = head_loss(&out, &gen_v, &fake_labels, spec.classes)?;
        if !g.loss.is_finite() {
            halted = Some(format!("step {step}: non-finite generator loss"));
            break;
        }
        let grad_img = disc
            .backward_from_logits(&g.grad, true)?
            .ok_or_else(|| Error::invalid("discriminator returned no input gradient"))?;
        gen.zero_grad();
        gen.backward_params(&grad_img)?;
        if let Err(e) = g_opt.step(&mut gen.params_mut()) {
            halted = Some(format!("step {step}: generator update failed: {e}"));
            break;
        }
        if let Some(h) = d_print {
            check_unchanged("discriminator", h, &disc, step)?;
        }

        history.records.push(GanRecord {
            step,
            d_loss: d.loss,
            g_loss: g.loss,
            d_acc_real: fraction(&d.hits[..n]),
            d_acc_fake: fraction(&d.hits[n..]),
        });
        if snap_step {
            let r = history.last().expect("record just pushed");
            log::info!(
                "step {step}: d_loss {:.4} g_loss {:.4} acc real {:.2} fake {:.2}",
                r.d_loss,
                r.g_loss,
                r.d_acc_real,
                r.d_acc_fake
            );
            snapshots.push(Snapshot {
                step,
                sheet: sheet(&gen, spec.classes, cfg.snapshot_per_label.max(1), &snap_latent)?,
            });
        }
    }
    if let Some(msg) = &halted {
        log::error!("training halted: {msg}");
    }
    gen.set_mode(Mode::Inference);
    disc.set_mode(Mode::Inference);
    Ok(GanOutcome {
        generator: gen,
        discriminator: disc,
        history,
        snapshots,
        halted,
    })
}

/// Number of labels a generator was built for.
pub fn generator_classes(generator: &Network<f32>) -> Result<usize> {
    match generator.layers().first() {
        Some(Layer::Embedding(e)) => Ok(e.classes),
        _ => Err(Error::invalid("generator must start with a label embedding")),
    }
}

/// `n` images in `[0, 1]` from seeded standard-normal latents, all
/// conditioned on `label`. The generator runs in inference mode on a copy.
pub fn generate(generator: &Network<f32>, label: usize, n: usize, seed: u64) -> Result<Vec<ImageGrid>> {
    let classes = generator_classes(generator)?;
    if label >= classes {
        return Err(Error::invalid(format!("label {label} outside 0..{classes}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut g = generator.clone();
    g.set_mode(Mode::Inference);
    let dim = g.input_shape()[0];
    let mut rng = rng_from_seed(derive_seed(seed, STREAM_LATENT));
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let b = (n - out.len()).min(GEN_BATCH);
        let z = latent_batch(&mut rng, b, dim)?;
        let y = g.forward_labeled(&z, Some(&vec![label; b]))?;
        out.extend(to_images(&y)?);
    }
    Ok(out)
}

/// Resizes a generated image to the oracle's input and binarizes it at 0.5,
/// matching the binary rasters the oracle was trained on.
pub fn oracle_view(img: &ImageGrid, height: usize, width: usize) -> ImageGrid {
    let r = if img.height() == height && img.width() == width {
        img.clone()
    } else {
        img.resample_bilinear(height, width)
    };
    let v = r.values().iter().map(|&x| if x >= 0.5 { 1.0 } else { 0.0 }).collect();
    ImageGrid::from_values(height, width, v).expect("size preserved")
}

/// Per label, the fraction of `n_per_label` samples the oracle assigns to
/// that label. Empty when `n_per_label` is 0.
pub fn label_fidelity(
    generator: &Network<f32>,
    oracle: &Network<f32>,
    n_per_label: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let classes = generator_classes(generator)?;
    if oracle.output_shape() != [classes] {
        return Err(Error::invalid(format!(
            "oracle outputs {:?}, generator has {classes} labels",
            oracle.output_shape()
        )));
    }
    if n_per_label == 0 {
        return Ok(Vec::new());
    }
    let shape = oracle.input_shape().to_vec();
    let (h, w) = (shape[1], shape[2]);
    let mut oracle = oracle.clone();
    oracle.set_mode(Mode::Inference);
    (0..classes)
        .map(|label| {
            let views: Vec<ImageGrid> = generate(generator, label, n_per_label, derive_seed(seed, label as u64))?
                .iter()
                .map(|im| oracle_view(im, h, w))
                .collect();
            let refs: Vec<&ImageGrid> = views.iter().collect();
            let pred = predict_all(&mut oracle, &refs)?;
            Ok(pred.iter().filter(|&&p| p == label).count() as f64 / n_per_label as f64)
        })
        .collect()
}

/// Smallest mean absolute pixel distance from `generated` to any dataset
/// image; infinite for an empty dataset.
pub fn novelty_check(generated: &ImageGrid, ds: &LabeledDataset) -> Result<f64> {
    if let Some(size) = ds.image_size() {
        if size != (generated.height(), generated.width()) {
            return Err(Error::shape(format!(
                "{}x{} sample vs {size:?} dataset",
                generated.height(),
                generated.width()
            )));
        }
    }
    Ok(ds
        .samples()
        .iter()
        .map(|(im, _)| generated.mean_abs_distance(im))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GanSpec {
        GanSpec {
            latent_dim: 8,
            classes: 3,
            conditioning: EmbedMode::Multiply,
            image: (8, 12),
            g_channels: [4, 4, 2],
            d_channels: vec![4, 4],
            d_dropout: 0.25,
            leaky_slope: 0.2,
        }
    }

    #[test]
    fn shape_and_facade_presets() {
        let spec = tiny();
        let g = build_generator(&spec, 1).unwrap();
        assert_eq!(g.output_shape(), vec![1, 8, 12]);
        let d = build_discriminator(&spec, 1).unwrap();
        assert_eq!(d.output_shape(), vec![4]);
        assert_eq!(generator_classes(&g).unwrap(), 3);
        assert_eq!(GanSpec::facade().image, (32, 72));
        assert_eq!(GanSpec::facade().conditioning, EmbedMode::Concat);
        assert_eq!(GanSpec::shapes(32).conditioning, EmbedMode::Multiply);
        let f = GanTrainConfig::facade();
        assert_eq!((f.steps, f.batch_size), (12_000, 5));
        assert!(f.adam.lr < AdamConfig::GAN.lr);
    }

    #[test]
    fn unreachable_size_rejected() {
        let mut spec = tiny();
        spec.image = (10, 12);
        assert!(build_generator(&spec, 1).is_err());
        assert!(build_discriminator(&spec, 1).is_err());
        spec.image = (8, 12);
        spec.classes = 1;
        assert!(build_generator(&spec, 1).is_err());
    }

    #[test]
    fn head_loss_gradient_layout() {
        let out = Tensor::from_vec(&[1, 3], vec![0.8f32, 0.25, 0.75]).unwrap();
        let h = head_loss(&out, &[1.0], &[1], 2).unwrap();
        let expected = -(0.8f64).ln() - (0.75f64).ln();
        assert!((h.loss - expected).abs() < 1e-6);
        let g = h.grad.data();
        assert!((g[0] + 0.2).abs() < 1e-6);
        assert!((g[1] - 0.25).abs() < 1e-6 && (g[2] + 0.25).abs() < 1e-6);
        assert_eq!(h.hits, vec![true]);
    }
}

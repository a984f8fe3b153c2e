//! CNN shape classifier: architecture, seeded training with a stratified
//! split, prediction and evaluation.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::dataset::{csv_err, LabeledDataset};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::nn::loss::{categorical_crossentropy, one_hot, softmax_crossentropy_logit_grad, PROB_CLIP};
use crate::nn::{Adam, AdamConfig, Init, Mode, Network, NetworkBuilder, Tensor};
use crate::rng::{derive_seed, stream_rng, STREAM_DROPOUT, STREAM_SHUFFLE, STREAM_SPLIT};

const EVAL_BATCH: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvBlock {
    pub filters: usize,
    pub kernel: usize,
    /// Max-pool window and stride after the ReLU; 1 disables pooling.
    pub pool: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnSpec {
    /// `(height, width)` of the single-channel input.
    pub input: (usize, usize),
    pub conv: Vec<ConvBlock>,
    pub dense: Vec<usize>,
    pub dropout: f64,
    pub classes: usize,
}

impl Default for CnnSpec {
    fn default() -> Self {
        Self {
            input: (100, 100),
            conv: vec![
                ConvBlock { filters: 30, kernel: 5, pool: 2 },
                ConvBlock { filters: 15, kernel: 3, pool: 2 },
            ],
            dense: vec![128],
            dropout: 0.2,
            classes: 6,
        }
    }
}

/// conv blocks -> flatten -> dense/relu (+dropout) -> dense(classes) -> softmax.
pub fn build_cnn(spec: &CnnSpec, seed: u64) -> Result<Network<f32>> {
    if spec.classes < 2 || !(0.0..1.0).contains(&spec.dropout) {
        return Err(Error::invalid("CNN needs >= 2 classes and dropout in [0, 1)"));
    }
    let mut b = NetworkBuilder::new(&[1, spec.input.0, spec.input.1], seed);
    for blk in &spec.conv {
        b = b.conv2d(blk.filters, blk.kernel, 1, 0, Init::He).relu();
        if blk.pool > 1 {
            b = b.max_pool(blk.pool, blk.pool);
        }
    }
    b = b.flatten();
    for &w in &spec.dense {
        b = b.dense(w, Init::He).relu();
        if spec.dropout > 0.0 {
            b = b.dropout(spec.dropout);
        }
    }
    let mut net = b.dense(spec.classes, Init::Glorot).softmax().build()?;
    net.reseed_dropout(derive_seed(seed, STREAM_DROPOUT));
    Ok(net)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of each class used for training (0.75 gives a 3:1 split).
    pub train_fraction: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 20,
            train_fraction: 0.75,
            seed: 42,
            adam: AdamConfig::CLASSIFIER,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("need epochs >= 1, batch_size >= 1, train_fraction in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Per-class seeded shuffle, then the first `round(n_c * train_fraction)`
/// (at least one) of each class go to training. Both lists are sorted.
pub fn stratified_split(labels: &[usize], classes: usize, train_fraction: f64, seed: u64) -> Split {
    let mut rng = stream_rng(seed, STREAM_SPLIT);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len());
        train.extend_from_slice(&idx[..k]);
        val.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Split { train, val }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_acc: f64,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
    /// Set when fewer than two classes were present or validation was empty.
    pub degenerate_split: bool,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == self.best_epoch)
    }

    /// CSV `epoch,train_acc,train_loss,val_acc,val_loss`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_acc", "train_loss", "val_acc", "val_loss"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                format!("{:.6}", r.train_acc),
                format!("{:.6}", r.train_loss),
                format!("{:.6}", r.val_acc),
                format!("{:.6}", r.val_loss),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: Network<f32>,
    pub history: TrainHistory,
    pub split: Split,
}

/// `[N, 1, H, W]` tensor of the given images.
pub fn image_batch(images: &[&ImageGrid]) -> Result<Tensor<f32>> {
    let first = images.first().ok_or_else(|| Error::invalid("empty image batch"))?;
    let (h, w) = (first.height(), first.width());
    let mut data = Vec::with_capacity(images.len() * h * w);
    for im in images {
        if im.height() != h || im.width() != w {
            return Err(Error::shape("images in a batch must share one size"));
        }
        data.extend_from_slice(im.values());
    }
    Tensor::from_vec(&[images.len(), 1, h, w], data)
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn check_input(net: &Network<f32>, img: &ImageGrid) -> Result<()> {
    if net.input_shape() != [1, img.height(), img.width()] {
        return Err(Error::shape(format!(
            "{}x{} image for a network expecting {:?}",
            img.height(),
            img.width(),
            net.input_shape()
        )));
    }
    Ok(())
}

/// Trains the default architecture.
pub fn train_classifier(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<(Network<f32>, TrainHistory)> {
    let (h, w) = ds.image_size().ok_or_else(|| Error::invalid("empty dataset"))?;
    let spec = CnnSpec {
        input: (h, w),
        classes: ds.num_classes(),
        ..CnnSpec::default()
    };
    train_classifier_with(ds, &spec, cfg).map(|o| (o.net, o.history))
}

/// Mini-batch Adam on cross-entropy; keeps the weights of the epoch with the
/// best validation accuracy (ties: lower validation loss).
pub fn train_classifier_with(ds: &LabeledDataset, spec: &CnnSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    if ds.num_classes() != spec.classes {
        return Err(Error::invalid(format!(
            "dataset has {} classes, network {}",
            ds.num_classes(),
            spec.classes
        )));
    }
    let labels = ds.labels();
    let split = stratified_split(&labels, spec.classes, cfg.train_fraction, cfg.seed);
    let present = ds.class_counts().iter().filter(|&&n| n > 0).count();
    let degenerate = present < 2 || split.val.is_empty();
    if degenerate {
        log::warn!("degenerate stratification: {present} class(es), {} validation samples", split.val.len());
    }

    let mut net = build_cnn(spec, cfg.seed)?;
    let mut opt = Adam::new(cfg.adam);
    let mut shuffle_rng = stream_rng(cfg.seed, STREAM_SHUFFLE);
    let mut order = split.train.clone();
    let mut history = TrainHistory {
        degenerate_split: degenerate,
        ..TrainHistory::default()
    };
    let mut best: Option<(f64, f64, Network<f32>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        net.set_mode(Mode::Training);
        let (mut correct, mut loss_sum) = (0usize, 0.0f64);
        for chunk in order.chunks(cfg.batch_size) {
            let imgs: Vec<&ImageGrid> = chunk.iter().map(|&i| ds.image(i)).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let x = image_batch(&imgs)?;
            let t = one_hot::<f32>(&ys, spec.classes)?;
            let p = net.forward(&x)?;
            loss_sum += categorical_crossentropy(&p, &t)? * chunk.len() as f64;
            correct += (0..chunk.len())
                .filter(|&n| argmax(p.sample(n)) == ys[n])
                .count();
            let g = softmax_crossentropy_logit_grad(&p, &t)?;
            net.zero_grad();
            net.backward_from_logits(&g, false)?;
            opt.step(&mut net.params_mut())?;
        }
        let n_train = order.len() as f64;
        let (val_acc, val_loss) = if split.val.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let r = evaluate_indices(&mut net, ds, &split.val)?;
            (r.accuracy, r.mean_loss)
        };
        let rec = EpochRecord {
            epoch,
            train_acc: correct as f64 / n_train,
            train_loss: loss_sum / n_train,
            val_acc,
            val_loss,
        };
        log::info!(
            "epoch {epoch}: train acc {:.4} loss {:.4} | val acc {:.4} loss {:.4}",
            rec.train_acc,
            rec.train_loss,
            rec.val_acc,
            rec.val_loss
        );
        history.records.push(rec);
        let better = match &best {
            _ if val_acc.is_nan() => true,
            None => true,
            Some((a, l, _)) => val_acc > *a || (val_acc == *a && val_loss < *l),
        };
        if better {
            history.best_epoch = epoch;
            best = Some((val_acc, val_loss, net.clone()));
        }
    }
    let mut net = best.map(|b| b.2).expect("at least one epoch");
    net.set_mode(Mode::Inference);
    Ok(TrainOutcome { net, history, split })
}

/// Label and class probabilities for one image, in inference mode.
pub fn predict(net: &mut Network<f32>, img: &ImageGrid) -> Result<(usize, Vec<f32>)> {
    check_input(net, img)?;
    let prev = net.mode();
    net.set_mode(Mode::Inference);
    let out = net.forward(&image_batch(&[img])?);
    net.set_mode(prev);
    let probs = out?.into_data();
    Ok((argmax(&probs), probs))
}

/// Predicted labels for many images, batched.
pub fn predict_all(net: &mut Network<f32>, images: &[&ImageGrid]) -> Result<Vec<usize>> {
    let prev = net.mode();
    net.set_mode(Mode::Inference);
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(EVAL_BATCH) {
        check_input(net, chunk[0])?;
        let p = net.forward(&image_batch(chunk)?)?;
        out.extend((0..chunk.len()).map(|n| argmax(p.sample(n))));
    }
    net.set_mode(prev);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_loss: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Header `true\pred,<names...>`, then one row per true class.
    pub fn write_confusion_csv(&self, out: impl Write, names: &[&str]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["true\\pred".to_string()];
        header.extend(names.iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.confusion.iter().enumerate() {
            let mut rec = vec![names.get(i).map(|s| s.to_string()).unwrap_or_else(|| i.to_string())];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn evaluate_indices(net: &mut Network<f32>, ds: &LabeledDataset, idx: &[usize]) -> Result<EvalReport> {
    if idx.is_empty() {
        return Err(Error::invalid("evaluation on an empty set"));
    }
    let classes = net.output_shape().iter().product::<usize>();
    if ds.num_classes() > classes {
        return Err(Error::shape(format!("{} dataset classes, {classes} outputs", ds.num_classes())));
    }
    let prev = net.mode();
    net.set_mode(Mode::Inference);
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut loss = 0.0;
    for chunk in idx.chunks(EVAL_BATCH) {
        let imgs: Vec<&ImageGrid> = chunk.iter().map(|&i| ds.image(i)).collect();
        check_input(net, imgs[0])?;
        let p = net.forward(&image_batch(&imgs)?)?;
        for (n, &i) in chunk.iter().enumerate() {
            let row = p.sample(n);
            let y = ds.label(i);
            confusion[y][argmax(row)] += 1;
            loss -= (row[y] as f64).clamp(PROB_CLIP, 1.0 - PROB_CLIP).ln();
        }
    }
    net.set_mode(prev);
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        accuracy: correct as f64 / idx.len() as f64,
        mean_loss: loss / idx.len() as f64,
        confusion,
    })
}

/// Accuracy, mean cross-entropy and confusion matrix over a whole dataset.
pub fn evaluate(net: &mut Network<f32>, ds: &LabeledDataset) -> Result<EvalReport> {
    let idx: Vec<usize> = (0..ds.len()).collect();
    evaluate_indices(net, ds, &idx)
}

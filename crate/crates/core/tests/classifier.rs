use gendesign::classifier::*;
use gendesign::shapegen::{canonical_template, rasterize, synth_dataset, JitterSpec, ShapeClass};
use gendesign::{ImageGrid, LabeledDataset, ManifestRecord};
use proptest::prelude::*;

fn small_spec(classes: usize) -> CnnSpec {
    CnnSpec {
        input: (100, 100),
        conv: vec![ConvBlock { filters: 4, kernel: 5, pool: 4 }],
        dense: vec![16],
        dropout: 0.2,
        classes,
    }
}

fn square() -> ImageGrid {
    rasterize(&canonical_template(ShapeClass::Square), 100).unwrap().image
}

#[test]
fn default_network_outputs_six_probabilities() {
    let mut net = build_cnn(&CnnSpec::default(), 3).unwrap();
    assert_eq!(net.output_shape(), vec![6]);
    let (label, probs) = predict(&mut net, &ImageGrid::zeros(100, 100)).unwrap();
    assert!(label < 6);
    let sum: f32 = probs.iter().sum();
    assert!((sum - 1.0).abs() < 1e-5);
}

#[test]
fn same_seed_same_initial_weights() {
    let a = build_cnn(&CnnSpec::default(), 11).unwrap();
    let b = build_cnn(&CnnSpec::default(), 11).unwrap();
    let c = build_cnn(&CnnSpec::default(), 12).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(a.fingerprint(), c.fingerprint());
}

#[test]
fn inconsistent_spec_rejected() {
    let mut spec = CnnSpec::default();
    spec.input = (6, 6);
    assert!(build_cnn(&spec, 1).is_err());
    let bad = TrainConfig { train_fraction: 1.0, ..TrainConfig::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn size_mismatch_rejected() {
    let mut net = build_cnn(&CnnSpec::default(), 3).unwrap();
    assert!(predict(&mut net, &ImageGrid::zeros(64, 64)).is_err());
}

#[test]
fn repeated_single_sample_is_memorized() {
    let mut ds = LabeledDataset::new(6);
    for i in 0..8 {
        let rec = ManifestRecord { filename: format!("s{i}.pgm"), label: 3, seed: 0 };
        ds.push(square(), rec).unwrap();
    }
    let cfg = TrainConfig { epochs: 10, batch_size: 4, ..TrainConfig::default() };
    let out = train_classifier_with(&ds, &small_spec(6), &cfg).unwrap();
    assert!(out.history.degenerate_split);
    assert_eq!(out.history.records.len(), 10);
    assert_eq!(out.history.records.last().unwrap().train_acc, 1.0);
    let mut net = out.net;
    assert_eq!(predict(&mut net, &square()).unwrap().0, 3);
}

#[test]
fn training_is_deterministic_and_history_is_complete() {
    let ds = synth_dataset(8, JitterSpec::default(), 5).unwrap();
    let cfg = TrainConfig { epochs: 2, batch_size: 10, ..TrainConfig::default() };
    let a = train_classifier_with(&ds, &small_spec(6), &cfg).unwrap();
    let b = train_classifier_with(&ds, &small_spec(6), &cfg).unwrap();
    assert_eq!(a.net.fingerprint(), b.net.fingerprint());
    assert_eq!(a.history, b.history);
    assert_eq!(a.split.train.len(), 36);
    assert_eq!(a.split.val.len(), 12);
    assert!(!a.history.degenerate_split);
    for r in &a.history.records {
        assert!((0.0..=1.0).contains(&r.train_acc) && (0.0..=1.0).contains(&r.val_acc));
    }
    assert!(a.history.best().is_some());

    let mut buf = Vec::new();
    a.history.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("epoch,train_acc,train_loss,val_acc,val_loss\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn evaluation_report_is_consistent() {
    let ds = synth_dataset(3, JitterSpec::default(), 9).unwrap();
    let mut net = build_cnn(&small_spec(6), 4).unwrap();
    net.set_mode(gendesign::nn::Mode::Inference);
    let rep = evaluate(&mut net, &ds).unwrap();
    assert_eq!(rep.total(), ds.len());
    let trace: usize = (0..6).map(|c| rep.confusion[c][c]).sum();
    assert!((rep.accuracy - trace as f64 / ds.len() as f64).abs() < 1e-12);
    for (c, row) in rep.confusion.iter().enumerate() {
        assert_eq!(row.iter().sum::<usize>(), 3, "class {c}");
    }
    let mut buf = Vec::new();
    rep.write_confusion_csv(&mut buf, &["i", "l", "rectangle", "square", "t", "z"]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
}

#[test]
fn inference_is_repeatable() {
    let mut net = build_cnn(&CnnSpec::default(), 8).unwrap();
    net.set_mode(gendesign::nn::Mode::Training);
    let img = square();
    let a = predict(&mut net, &img).unwrap();
    let b = predict(&mut net, &img).unwrap();
    assert_eq!(a, b);
    let imgs = [&img, &img];
    assert_eq!(predict_all(&mut net, &imgs).unwrap(), vec![a.0, a.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stratified_split_partitions_each_class(
        labels in proptest::collection::vec(0usize..6, 1..120),
        seed in any::<u64>(),
    ) {
        let s = stratified_split(&labels, 6, 0.75, seed);
        prop_assert_eq!(&s, &stratified_split(&labels, 6, 0.75, seed));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for c in 0..6 {
            let n = labels.iter().filter(|&&l| l == c).count();
            let k = s.train.iter().filter(|&&i| labels[i] == c).count();
            if n > 0 {
                let expect = ((n as f64 * 0.75).round() as usize).clamp(1, n);
                prop_assert_eq!(k, expect);
            }
        }
    }
}

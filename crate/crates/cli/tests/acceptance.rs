//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line on stderr (uncaptured, so it shows with
//! the default harness settings).
//!
//! `GENDESIGN_FULL_GAN=1` additionally runs the 64x64 shape GAN profile
//! (about two hours on one core). `GENDESIGN_FACADE_STEPS` overrides the
//! facade GAN step count.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, OnceLock};

use gendesign::acgan::{generate, label_fidelity, novelty_check, train_acgan, GanSpec, GanTrainConfig};
use gendesign::classifier::{evaluate, predict, stratified_split, train_classifier_with, CnnSpec, TrainConfig, TrainOutcome};
use gendesign::daylight::{
    day_of_year, diffuse_from_cell, run_sequence, sun_position, synth_facade_dataset, FacadeDataset, RoomModel,
    SdaEvaluator, SkySchedule, CELLS, HOUSTON_LATITUDE,
};
use gendesign::imageproc::{dilate, erode, open, ratio_preserving_clean, BinaryImage, StructuringElement};
use gendesign::nn::gradcheck::{finite_diff_check, finite_diff_check_network, sample_input};
use gendesign::nn::layer::Layer;
use gendesign::nn::{EmbedMode, Init, NetworkBuilder};
use gendesign::report::{make_table1_report, reference_ranges};
use gendesign::rng::splitmix64;
use gendesign::shapegen::{canonical_template, freehand_dataset, rasterize, synth_dataset, JitterSpec, ShapeClass};
use gendesign::LabeledDataset;
use sha2::{Digest, Sha256};

const GRAD_TOL: f64 = 1e-4;

fn line(n: u32, ok: bool, detail: impl std::fmt::Display) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} {detail}");
}

fn skipped(n: u32, detail: impl std::fmt::Display) {
    let _ = writeln!(std::io::stderr(), "criterion {n}: SKIPPED {detail}");
}

struct Cnn {
    outcome: TrainOutcome,
    data: LabeledDataset,
}

// The standard classifier is shared by criteria 1, 2 and 4.
fn standard_cnn() -> &'static Mutex<Cnn> {
    static CNN: OnceLock<Mutex<Cnn>> = OnceLock::new();
    CNN.get_or_init(|| {
        let data = synth_dataset(1000, JitterSpec::default(), 42).unwrap();
        let outcome = train_classifier_with(&data, &CnnSpec::default(), &TrainConfig::default()).unwrap();
        Mutex::new(Cnn { outcome, data })
    })
}

#[test]
fn criterion_1_classifier_accuracy() {
    let mut cnn = standard_cnn().lock().unwrap();
    let Cnn { outcome, data } = &mut *cnn;
    assert_eq!(data.len(), 6000);
    assert_eq!(outcome.split.train.len(), 4500);
    assert_eq!(outcome.split.val.len(), 1500);
    let h = &outcome.history;
    let last = *h.records.last().unwrap();
    let first = h.records[0];
    let square = rasterize(&canonical_template(ShapeClass::Square), 100).unwrap().image;
    let (pred, probs) = predict(&mut outcome.net, &square).unwrap();
    let ok = h.records.len() == 10
        && last.val_acc >= 0.90
        && last.val_loss <= 0.50
        && last.val_acc >= first.val_acc
        && pred == ShapeClass::Square.index();
    line(
        1,
        ok,
        format!(
            "val_acc={:.4} val_loss={:.4} epochs={} square_p={:.3}",
            last.val_acc,
            last.val_loss,
            h.records.len(),
            probs[ShapeClass::Square.index()]
        ),
    );
    assert!(ok, "{h:?}");
}

#[test]
fn criterion_2_freehand_accuracy() {
    let mut cnn = standard_cnn().lock().unwrap();
    let fh = freehand_dataset(45, 42).unwrap();
    assert_eq!(fh.len(), 45);
    let rep = evaluate(&mut cnn.outcome.net, &fh).unwrap();
    let ok = rep.accuracy >= 0.85;
    line(2, ok, format!("freehand_acc={:.4} n={}", rep.accuracy, rep.total()));
    assert!(ok, "{:?}", rep.confusion);
}

#[test]
fn criterion_3_gradient_checks() {
    let layer = |input: &[usize], f: &dyn Fn(NetworkBuilder<f64>) -> NetworkBuilder<f64>| {
        f(NetworkBuilder::new(input, 11)).build().unwrap().layers()[0].clone()
    };
    let cases: Vec<(&str, Layer<f64>, Vec<usize>)> = vec![
        ("dense", layer(&[8], &|b| b.dense(4, Init::Glorot)), vec![3, 8]),
        ("conv2d", layer(&[2, 7, 7], &|b| b.conv2d(3, 3, 2, 1, Init::He)), vec![2, 2, 7, 7]),
        ("conv2d_transpose", layer(&[2, 3, 3], &|b| b.conv2d_transpose(2, 4, 2, 1, Init::He)), vec![2, 2, 3, 3]),
        ("max_pool", layer(&[2, 6, 6], &|b| b.max_pool(2, 2)), vec![2, 2, 6, 6]),
        ("upsample", layer(&[2, 3, 3], &|b| b.upsample(2)), vec![2, 2, 3, 3]),
        ("batch_norm", layer(&[3, 4, 4], &|b| b.batch_norm()), vec![4, 3, 4, 4]),
        ("embedding", layer(&[6], &|b| b.embedding(3)), vec![5, 6]),
        ("embedding_concat", layer(&[6], &|b| b.embedding_with(3, EmbedMode::Concat)), vec![5, 6]),
        ("relu", Layer::relu(), vec![2, 10]),
        ("leaky_relu", Layer::leaky_relu(0.2), vec![2, 10]),
        ("tanh", Layer::tanh(), vec![3, 5]),
        ("sigmoid", Layer::sigmoid(), vec![3, 5]),
        ("softmax", Layer::softmax(), vec![3, 6]),
        ("aux_heads", Layer::aux_heads(), vec![3, 7]),
        ("dropout", Layer::dropout(0.3), vec![4, 10]),
        ("flatten", Layer::flatten(), vec![2, 2, 3, 3]),
        ("reshape", Layer::reshape(&[2, 9]), vec![2, 3, 6]),
    ];
    let mut worst = ("", 0.0f64);
    let mut failed = Vec::new();
    for (name, l, shape) in cases {
        let r = finite_diff_check(l, &shape, 17).unwrap();
        if r.max_rel_error() > worst.1 {
            worst = (name, r.max_rel_error());
        }
        if !r.passes(GRAD_TOL) || r.coords_checked == 0 {
            failed.push(name);
        }
    }
    // both heads of a small discriminator, in 64-bit
    let spec = GanSpec {
        latent_dim: 4,
        classes: 3,
        conditioning: EmbedMode::Multiply,
        image: (8, 8),
        g_channels: [4, 3, 2],
        d_channels: vec![2, 3],
        d_dropout: 0.25,
        leaky_slope: 0.2,
    };
    let mut d = gendesign::acgan::build_discriminator(&spec, 5).unwrap().cast::<f64>().unwrap();
    let r = finite_diff_check_network(&mut d, &sample_input(&[3, 1, 8, 8], 2), None, 3).unwrap();
    if !r.passes(GRAD_TOL) {
        failed.push("discriminator");
    }
    let ok = failed.is_empty();
    line(3, ok, format!("layers=17+discriminator worst={}:{:.2e} failed={failed:?}", worst.0, worst.1.max(r.max_rel_error())));
    assert!(ok);
}

fn shape_gan_check(n: u32, data: &LabeledDataset, size: usize, steps: usize, min_fidelity: f64) {
    let spec = GanSpec::shapes(size);
    let cfg = GanTrainConfig { steps, batch_size: 32, seed: 42, ..GanTrainConfig::default() };
    let o = train_acgan(data, &spec, &cfg).unwrap();
    let oracle = standard_cnn().lock().unwrap().outcome.net.clone();
    let fid = label_fidelity(&o.generator, &oracle, 50, 42).unwrap();
    let mean = fid.iter().sum::<f64>() / fid.len() as f64;
    let mut min_novelty = f64::INFINITY;
    for label in 0..ShapeClass::COUNT {
        for img in generate(&o.generator, label, 8, 7).unwrap() {
            min_novelty = min_novelty.min(novelty_check(&img, data).unwrap());
        }
    }
    let ok = o.halted.is_none()
        && o.history.len() == steps
        && o.history.all_finite()
        && mean >= min_fidelity
        && min_novelty > 0.0;
    let last = o.history.last().copied().unwrap();
    line(
        n,
        ok,
        format!(
            "images={} size={size} steps={} d_loss={:.3} g_loss={:.3} fidelity={mean:.3} per_label={fid:.2?} min_novelty={min_novelty:.4}",
            data.len(),
            o.history.len(),
            last.d_loss,
            last.g_loss
        ),
    );
    assert!(ok, "halted {:?}", o.halted);
}

#[test]
fn criterion_4_shape_gan_ci_profile() {
    let data = synth_dataset(134, JitterSpec::default(), 42)
        .unwrap()
        .random_subset(800, 42)
        .unwrap()
        .map_images(|im| im.resample_area(32, 32))
        .unwrap();
    shape_gan_check(4, &data, 32, 600, 0.5);
}

#[test]
fn criterion_4_shape_gan_full_profile() {
    if std::env::var("GENDESIGN_FULL_GAN").as_deref() != Ok("1") {
        skipped(4, "full 64x64 profile (set GENDESIGN_FULL_GAN=1)");
        return;
    }
    let data = standard_cnn().lock().unwrap().data.clone();
    let data = data.random_subset(2616, 42).unwrap().map_images(|im| im.resample_area(64, 64)).unwrap();
    shape_gan_check(4, &data, 64, 5000, 0.70);
}

fn facade_dataset() -> &'static FacadeDataset {
    static DS: OnceLock<FacadeDataset> = OnceLock::new();
    DS.get_or_init(|| synth_facade_dataset(&[0, 1, 2, 3], &SkySchedule::standard()).unwrap())
}

#[test]
fn criterion_5_facade_dataset() {
    let ds = facade_dataset();
    let mut exact = true;
    let mut pairs = 0;
    let mut monotone = 0;
    for (i, r) in ds.records.iter().enumerate() {
        exact &= r.wwr_pct == 100.0 * (r.run + 1) as f64 / CELLS as f64;
        exact &= ds.patterns[i].wwr_pct() == r.wwr_pct;
        if r.run > 0 {
            let prev = &ds.records[i - 1];
            assert_eq!((prev.seed, prev.run + 1), (r.seed, r.run));
            pairs += 1;
            monotone += usize::from(r.sda_pct >= prev.sda_pct);
        }
    }
    let nested = (0..4).all(|s| run_sequence(s).windows(2).all(|w| w[0].is_subset_of(&w[1])));
    let ok = ds.len() == 572 && exact && pairs == 568 && monotone == 568 && nested;
    line(5, ok, format!("patterns={} wwr_exact={exact} sda_non_decreasing={monotone}/{pairs}", ds.len()));
    assert!(ok);
}

#[test]
fn criterion_6_facade_generation_trend() {
    let steps = std::env::var("GENDESIGN_FACADE_STEPS").ok().and_then(|s| s.parse().ok()).unwrap_or(12_000);
    let ds = facade_dataset();
    let cfg = GanTrainConfig { steps, seed: 42, ..GanTrainConfig::facade() };
    let o = train_acgan(&ds.dataset, &GanSpec::facade(), &cfg).unwrap();
    let eval = SdaEvaluator::new(&RoomModel::default(), &SkySchedule::standard()).unwrap();
    let (report, _) = make_table1_report(&o.generator, 16, 42, &eval, &reference_ranges(ds)).unwrap();
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let header = csv.lines().next().unwrap_or("");
    let structure = csv.lines().count() == 6
        && ["label", "ref_wwr_min", "gen_wwr_pct", "gen_sda_pct", "wwr_label", "sda_label"]
            .iter()
            .all(|c| header.split(',').any(|h| h == *c));
    let trend = report.wwr_strictly_increasing();
    let wwr: Vec<String> = report.rows.iter().map(|r| format!("{}:{:.1}", r.label.letter(), r.wwr_pct)).collect();
    let ok = o.halted.is_none() && trend && structure;
    line(
        6,
        ok,
        format!(
            "steps={steps} wwr=[{}] strictly_increasing={trend} disagreements={} csv_ok={structure}",
            wwr.join(" "),
            report.disagreements()
        ),
    );
    assert!(ok, "\n{csv}");
}

type Set = HashSet<(i64, i64)>;

fn to_set(img: &BinaryImage) -> Set {
    let mut s = Set::new();
    for r in 0..img.height() {
        for c in 0..img.width() {
            if img.get(r, c) {
                s.insert((r as i64, c as i64));
            }
        }
    }
    s
}

// Brute-force set morphology on the unbounded plane, clipped afterwards.
fn set_dilate(x: &Set, b: &[(i64, i64)]) -> Set {
    x.iter().flat_map(|&(r, c)| b.iter().map(move |&(dr, dc)| (r + dr, c + dc))).collect()
}

fn set_erode(x: &Set, b: &[(i64, i64)], h: usize, w: usize) -> Set {
    let mut out = Set::new();
    for r in -8..h as i64 + 8 {
        for c in -8..w as i64 + 8 {
            if b.iter().all(|&(dr, dc)| x.contains(&(r + dr, c + dc))) {
                out.insert((r, c));
            }
        }
    }
    out
}

fn clip(s: &Set, h: usize, w: usize) -> Set {
    s.iter().copied().filter(|&(r, c)| r >= 0 && c >= 0 && r < h as i64 && c < w as i64).collect()
}

#[test]
fn criterion_7_morphology_laws() {
    const N: usize = 16;
    let ses = [
        StructuringElement::cross(),
        StructuringElement::square(),
        StructuringElement::new(2, 3, vec![true, false, true, false, true, true], (0, 1)).unwrap(),
    ];
    let mut state = 0x7e57u64;
    let mut failures = 0usize;
    let mut max_drift = 0.0f64;
    for i in 0..100 {
        // density varies from sparse to dense across the batch
        let density = (i % 9 + 1) as u64 * 10;
        let bits: Vec<bool> = (0..N * N)
            .map(|_| {
                state = splitmix64(state);
                state % 100 < density
            })
            .collect();
        let img = BinaryImage::from_values(N, N, bits).unwrap();
        let x = to_set(&img);
        for se in &ses {
            let b: Vec<(i64, i64)> = se.offsets().into_iter().map(|(a, c)| (a as i64, c as i64)).collect();
            let o = open(&img, se);
            let mut ok = to_set(&erode(&img, se)) == clip(&set_erode(&x, &b, N, N), N, N)
                && to_set(&dilate(&img, se)) == clip(&set_dilate(&x, &b), N, N)
                && to_set(&o) == clip(&set_dilate(&set_erode(&x, &b, N, N), &b), N, N)
                && o.is_subset_of(&img)
                && open(&o, se) == o;
            // complement duality, compared where neither side sees the border
            let reach = b.iter().map(|&(r, c)| r.abs().max(c.abs())).max().unwrap();
            let lhs = dilate(&img.complement(), &se.reflected());
            let rhs = erode(&img, se).complement();
            for r in reach..N as i64 - reach {
                for c in reach..N as i64 - reach {
                    ok &= lhs.get(r as usize, c as usize) == rhs.get(r as usize, c as usize);
                }
            }
            failures += usize::from(!ok);
        }
        let cleaned = ratio_preserving_clean(&img, &StructuringElement::cross(), 2.0).unwrap();
        max_drift = max_drift.max((cleaned.white_pct() - img.white_pct()).abs());
    }
    let ok = failures == 0 && max_drift <= 2.0;
    line(7, ok, format!("images=100 elements={} failures={failures} max_clean_drift={max_drift:.3}pp", ses.len()));
    assert!(ok);
}

const TINY_CONFIG: &str = r#"
seed = 7

[shapes]
per_class = 4
freehand = 6

[cnn]
epochs = 1
batch_size = 8

[shape_gan]
steps = 4
batch_size = 8
image_size = 32
subset = 0
snapshot_interval = 2

[facade]
seeds = [0]

[facade_gan]
steps = 4
batch_size = 5
snapshot_interval = 2

[report]
n = 2
fidelity_n = 2
"#;

fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let digest = Sha256::digest(std::fs::read(&p).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn run_pipeline(dir: &Path) -> BTreeMap<String, String> {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, TINY_CONFIG).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_gendesign"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("pipeline")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.lines().last().unwrap().starts_with("pipeline stages=7"), "{stdout}");
    hash_tree(&out)
}

#[test]
fn criterion_8_pipeline_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ha = run_pipeline(a.path());
    let hb = run_pipeline(b.path());
    let required = [
        "shapes/manifest.csv",
        "cnn/cnn.gdl",
        "cnn/cnn_history.csv",
        "shape_gan/generator.gdl",
        "shape_gan/discriminator.gdl",
        "shape_gan/fidelity.csv",
        "facade/manifest.csv",
        "facade_gan/generator.gdl",
        "report/table1.csv",
    ];
    let missing: Vec<&str> = required.iter().copied().filter(|f| !ha.contains_key(*f)).collect();
    let differing: Vec<&String> = ha.keys().filter(|k| ha.get(*k) != hb.get(*k)).collect();
    let ok = missing.is_empty() && differing.is_empty() && ha.len() == hb.len();
    line(8, ok, format!("files={} identical={} missing={missing:?}", ha.len(), ha.len() - differing.len()));
    assert!(ok, "differing {differing:?}");
}

// Midpoint-rule integral of L cos(a) cos(b) / r^2 over one facade cell, with
// L = E_dv / pi, the facade in the plane y = 0 and a horizontal sensor.
fn integrate_cell(room: &RoomModel, row: usize, col: usize, sensor: [f64; 3], edv: f64, n: usize) -> f64 {
    let (x0, x1, z0, z1) = room.cell_rect(row, col);
    let (hx, hz) = ((x1 - x0) / n as f64, (z1 - z0) / n as f64);
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (px, pz) = (x0 + (i as f64 + 0.5) * hx, z0 + (j as f64 + 0.5) * hz);
            let (dx, dy, dz) = (sensor[0] - px, sensor[1], pz - sensor[2]);
            let r2 = dx * dx + dy * dy + dz * dz;
            if dy > 0.0 && dz > 0.0 {
                sum += (dy / r2.sqrt()) * (dz / r2.sqrt()) / r2 * hx * hz;
            }
        }
    }
    edv / PI * sum
}

#[test]
fn criterion_9_solar_and_illuminance() {
    let day = day_of_year(3, 22);
    let s = sun_position(HOUSTON_LATITUDE, day, 12.0).unwrap();
    let room = RoomModel::default();
    let (row, col) = (3, 8);
    let c = room.cell_center(row, col);
    let sensor = [c[0], 2.0, room.sensor_height];
    let point = diffuse_from_cell(&room, row, col, sensor, 10_000.0);
    let numeric = integrate_cell(&room, row, col, sensor, 10_000.0, 400);
    let rel = (point - numeric).abs() / numeric;
    let ok = day == 81 && (s.altitude_deg - 60.24).abs() <= 0.01 && numeric > 0.0 && rel < 0.02;
    line(
        9,
        ok,
        format!("day={day} altitude={:.4} diffuse_point={point:.4} diffuse_integral={numeric:.4} rel_err={rel:.4}", s.altitude_deg),
    );
    assert!(ok);
}

#[test]
fn split_is_three_to_one() {
    let labels: Vec<usize> = (0..6000).map(|i| i % 6).collect();
    let s = stratified_split(&labels, 6, 0.75, 42);
    assert_eq!((s.train.len(), s.val.len()), (4500, 1500));
}

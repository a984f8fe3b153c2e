//! Subcommand implementations. Each writes its artifacts under the output
//! directory and returns a one-line `key=value` summary.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gendesign::acgan::{
    generate, generator_classes, label_fidelity, novelty_check, train_acgan, GanOutcome, GanSpec, GanTrainConfig,
};
use gendesign::classifier::{evaluate, train_classifier, EvalReport, TrainConfig};
use gendesign::daylight::{
    compute_sda, synth_facade_dataset, FacadeDataset, FacadePattern, PerformanceLabel, RoomModel, SdaEvaluator,
    SkySchedule, PX_PER_CELL,
};
use gendesign::imageproc::postprocess_facade;
use gendesign::nn::{checkpoint, Network};
use gendesign::report::{make_table1_report, reference_ranges};
use gendesign::shapegen::{freehand_dataset, synth_dataset, JitterSpec, ShapeClass};
use gendesign::{pgm, ImageGrid, LabeledDataset};

use crate::config::{Experiment, ExperimentConfig};
use crate::plot::ascii_plot;

/// Bad flag combinations; reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub struct Summary {
    line: String,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        Self { line: command.to_string() }
    }

    pub fn kv(mut self, key: &str, value: impl Display) -> Self {
        self.line.push_str(&format!(" {key}={value}"));
        self
    }

    pub fn f(self, key: &str, value: f64) -> Self {
        self.kv(key, format!("{value:.4}"))
    }
}

impl Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.line)
    }
}

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub ascii_plot: bool,
}

impl Ctx {
    fn out(&self) -> Result<&Path> {
        fs::create_dir_all(&self.cfg.out).with_context(|| format!("creating {}", self.cfg.out.display()))?;
        Ok(&self.cfg.out)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn shape_dataset(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    match &cfg.data {
        Some(dir) => LabeledDataset::load(dir, ShapeClass::COUNT)
            .with_context(|| format!("loading shape dataset from {}", dir.display())),
        None => Ok(synth_dataset(cfg.shapes.per_class, JitterSpec::default(), cfg.seed)?),
    }
}

fn facade_dataset(cfg: &ExperimentConfig) -> Result<FacadeDataset> {
    match &cfg.data {
        Some(dir) => {
            FacadeDataset::load(dir).with_context(|| format!("loading facade dataset from {}", dir.display()))
        }
        None => Ok(synth_facade_dataset(&cfg.facade.seeds, &SkySchedule::standard())?),
    }
}

fn load_net(path: &Path) -> Result<Network<f32>> {
    checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn synth_shapes(ctx: &Ctx, freehand: usize) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let out = ctx.out()?;
    let ds = synth_dataset(cfg.shapes.per_class, JitterSpec::default(), cfg.seed)?;
    ds.save(out)?;
    if freehand > 0 {
        freehand_dataset(freehand, cfg.seed)?.save(out.join("freehand"))?;
    }
    Ok(Summary::new("synth-shapes")
        .kv("images", ds.len())
        .kv("classes", ShapeClass::COUNT)
        .kv("per_class", cfg.shapes.per_class)
        .kv("freehand", freehand)
        .kv("seed", cfg.seed))
}

fn write_confusion(path: &Path, rep: &EvalReport) -> Result<()> {
    let names: Vec<&str> = ShapeClass::ALL.iter().map(|c| c.name()).collect();
    let mut w = create(path)?;
    rep.write_confusion_csv(&mut w, &names)?;
    w.flush()?;
    Ok(())
}

pub fn train_cnn(ctx: &Ctx) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let ds = shape_dataset(cfg)?;
    let tc = TrainConfig {
        epochs: cfg.cnn.epochs,
        batch_size: cfg.cnn.batch_size,
        seed: cfg.seed,
        ..TrainConfig::default()
    };
    let (mut net, hist) = train_classifier(&ds, &tc)?;
    let out = ctx.out()?;
    checkpoint::save(out.join("cnn.gdl"), &net)?;
    let mut w = create(&out.join("cnn_history.csv"))?;
    hist.write_csv(&mut w)?;
    w.flush()?;
    let best = hist.best().copied().context("empty training history")?;
    let mut summary = Summary::new("train-cnn")
        .kv("images", ds.len())
        .kv("epochs", hist.records.len())
        .kv("best_epoch", hist.best_epoch)
        .f("val_acc", best.val_acc)
        .f("val_loss", best.val_loss);
    if cfg.shapes.freehand > 0 {
        let fh = freehand_dataset(cfg.shapes.freehand, cfg.seed)?;
        let rep = evaluate(&mut net, &fh)?;
        write_confusion(&out.join("cnn_confusion_freehand.csv"), &rep)?;
        summary = summary.f("freehand_acc", rep.accuracy);
    }
    if ctx.ascii_plot {
        let tl: Vec<f64> = hist.records.iter().map(|r| r.train_loss).collect();
        let vl: Vec<f64> = hist.records.iter().map(|r| r.val_loss).collect();
        eprint!("{}", ascii_plot("loss per epoch (* train, o validation)", &[('*', &tl), ('o', &vl)]));
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GanKind {
    Shapes,
    Facade,
}

impl GanKind {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match cfg.experiment {
            Experiment::ShapesAcgan => Ok(Self::Shapes),
            Experiment::FacadeAcgan => Ok(Self::Facade),
            Experiment::ShapesCnn => usage("choose a GAN with --experiment shapes|facade"),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Shapes => "shapes",
            Self::Facade => "facade",
        }
    }
}

/// Shape images for GAN training: optional seeded subset, area-resampled.
pub fn shape_gan_data(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    let mut ds = shape_dataset(cfg)?;
    let g = &cfg.shape_gan;
    if g.subset > 0 && g.subset != ds.len() {
        ds = ds.random_subset(g.subset, cfg.seed)?;
    }
    let s = g.image_size;
    if ds.image_size() == Some((s, s)) {
        return Ok(ds);
    }
    Ok(ds.map_images(|im| im.resample_area(s, s))?)
}

fn save_gan(out: &Path, o: &GanOutcome) -> Result<()> {
    checkpoint::save(out.join("generator.gdl"), &o.generator)?;
    checkpoint::save(out.join("discriminator.gdl"), &o.discriminator)?;
    let mut w = create(&out.join("gan_history.csv"))?;
    o.history.write_csv(&mut w)?;
    w.flush()?;
    if !o.snapshots.is_empty() {
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir)?;
        for s in &o.snapshots {
            pgm::write(dir.join(format!("snapshot_{:05}.pgm", s.step)), &s.sheet)?;
        }
    }
    Ok(())
}

pub fn train_gan(ctx: &Ctx, kind: GanKind) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let (ds, spec, tc) = match kind {
        GanKind::Shapes => {
            let g = &cfg.shape_gan;
            let tc = GanTrainConfig {
                steps: g.steps,
                batch_size: g.batch_size,
                seed: cfg.seed,
                snapshot_interval: g.snapshot_interval,
                ..GanTrainConfig::default()
            };
            (shape_gan_data(cfg)?, GanSpec::shapes(g.image_size), tc)
        }
        GanKind::Facade => {
            let g = &cfg.facade_gan;
            let tc = GanTrainConfig {
                steps: g.steps,
                batch_size: g.batch_size,
                seed: cfg.seed,
                snapshot_interval: g.snapshot_interval,
                ..GanTrainConfig::facade()
            };
            (facade_dataset(cfg)?.dataset, GanSpec::facade(), tc)
        }
    };
    let o = train_acgan(&ds, &spec, &tc)?;
    let out = ctx.out()?;
    save_gan(out, &o)?;
    if ctx.ascii_plot {
        let d: Vec<f64> = o.history.records.iter().map(|r| r.d_loss).collect();
        let g: Vec<f64> = o.history.records.iter().map(|r| r.g_loss).collect();
        eprint!("{}", ascii_plot("loss per step (* discriminator, o generator)", &[('*', &d), ('o', &g)]));
    }
    let last = o.history.last().copied();
    let summary = Summary::new("train-acgan")
        .kv("experiment", kind.name())
        .kv("images", ds.len())
        .kv("steps", o.history.len())
        .f("d_loss", last.map_or(f64::NAN, |r| r.d_loss))
        .f("g_loss", last.map_or(f64::NAN, |r| r.g_loss))
        .kv("halted", if o.halted.is_some() { "yes" } else { "no" });
    if let Some(msg) = o.halted {
        println!("{summary}");
        bail!("training halted: {msg}");
    }
    Ok(summary)
}

fn parse_label(text: &str, classes: usize) -> Result<usize> {
    let parsed = if classes == PerformanceLabel::COUNT {
        text.parse::<PerformanceLabel>().map(|l| l.index())
    } else {
        text.parse::<ShapeClass>().map(|c| c.index())
    };
    match parsed {
        Ok(i) if i < classes => Ok(i),
        _ => usage(format!("label {text:?} is not valid for a {classes}-label generator")),
    }
}

fn label_name(label: usize, classes: usize) -> String {
    if classes == PerformanceLabel::COUNT {
        PerformanceLabel::ALL[label].to_string()
    } else {
        ShapeClass::ALL[label].name().to_string()
    }
}

pub fn generate_cmd(ctx: &Ctx, generator: &Path, label: &str, n: usize) -> Result<Summary> {
    let g = load_net(generator)?;
    let classes = generator_classes(&g)?;
    let label = parse_label(label, classes)?;
    let name = label_name(label, classes);
    let imgs = generate(&g, label, n, ctx.cfg.seed)?;
    let out = ctx.out()?;
    let facade = classes == PerformanceLabel::COUNT;
    for (i, im) in imgs.iter().enumerate() {
        pgm::write(out.join(format!("{name}_{i:03}.pgm")), im)?;
        if facade {
            fs::write(out.join(format!("{name}_{i:03}.txt")), postprocess_facade(im)?.to_text())?;
        }
    }
    if !imgs.is_empty() {
        pgm::write(out.join(format!("{name}_sheet.pgm")), &ImageGrid::mosaic(&imgs, 8.min(imgs.len()))?)?;
    }
    let (h, w) = imgs.first().map_or((0, 0), |im| (im.height(), im.width()));
    Ok(Summary::new("generate")
        .kv("label", name)
        .kv("n", imgs.len())
        .kv("height", h)
        .kv("width", w))
}

pub fn synth_facade(ctx: &Ctx) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let schedule = SkySchedule::standard();
    let ds = synth_facade_dataset(&cfg.facade.seeds, &schedule)?;
    let out = ctx.out()?;
    ds.save(out)?;
    let mut w = create(&out.join("schedule.csv"))?;
    schedule.write_csv(&mut w)?;
    w.flush()?;
    let counts = ds.dataset.class_counts();
    let max_sda = ds.records.iter().map(|r| r.sda_pct).fold(0.0, f64::max);
    let mut s = Summary::new("synth-facade").kv("patterns", ds.len());
    for l in PerformanceLabel::ALL {
        s = s.kv(&l.to_string(), counts[l.index()]);
    }
    Ok(s.f("max_sda", max_sda))
}

fn read_pattern(path: &Path) -> Result<FacadePattern> {
    let is_text = path.extension().is_some_and(|e| e == "txt");
    if is_text {
        return Ok(FacadePattern::from_text(&fs::read_to_string(path)?)?);
    }
    let im = pgm::read(path)?;
    let want = (gendesign::daylight::ROWS * PX_PER_CELL, gendesign::daylight::COLS * PX_PER_CELL);
    if (im.height(), im.width()) != want {
        bail!("{}x{} image; facade rasters are {}x{}", im.height(), im.width(), want.0, want.1);
    }
    Ok(postprocess_facade(&im)?)
}

pub fn simulate_sda(pattern: &Path) -> Result<Summary> {
    let p = read_pattern(pattern)?;
    let r = compute_sda(&RoomModel::default(), &p, &SkySchedule::standard())?;
    Ok(Summary::new("simulate-sda")
        .f("wwr", p.wwr_pct())
        .f("sda", r.sda_pct)
        .kv("label", r.label))
}

pub fn evaluate_cnn(ctx: &Ctx, cnn: &Path) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let mut net = load_net(cnn)?;
    let out = ctx.out()?;
    let mut s = Summary::new("evaluate").kv("model", "cnn");
    if let Some(dir) = &cfg.data {
        let ds = LabeledDataset::load(dir, ShapeClass::COUNT)?;
        let rep = evaluate(&mut net, &ds)?;
        write_confusion(&out.join("confusion_data.csv"), &rep)?;
        s = s.f("data_acc", rep.accuracy).f("data_loss", rep.mean_loss);
    }
    let n = cfg.shapes.freehand.max(1);
    let rep = evaluate(&mut net, &freehand_dataset(n, cfg.seed)?)?;
    write_confusion(&out.join("confusion_freehand.csv"), &rep)?;
    Ok(s.kv("freehand", n).f("freehand_acc", rep.accuracy))
}

pub fn evaluate_facade(ctx: &Ctx, generator: &Network<f32>) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let ds = facade_dataset(cfg)?;
    let eval = SdaEvaluator::new(&RoomModel::default(), &SkySchedule::standard())?;
    let (report, patterns) = make_table1_report(generator, cfg.report.n, cfg.seed, &eval, &reference_ranges(&ds))?;
    let out = ctx.out()?;
    let mut w = create(&out.join("table1.csv"))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let dir = out.join("report_patterns");
    fs::create_dir_all(&dir)?;
    for (row, pats) in report.rows.iter().zip(&patterns) {
        for (i, p) in pats.iter().enumerate() {
            fs::write(dir.join(format!("{}_{i:03}.txt", row.label)), p.to_text())?;
        }
    }
    let wwr: Vec<String> = report.rows.iter().map(|r| format!("{}:{:.2}", r.label, r.wwr_pct)).collect();
    Ok(Summary::new("evaluate")
        .kv("model", "facade")
        .kv("n", cfg.report.n)
        .kv("wwr", wwr.join(","))
        .kv("increasing", if report.wwr_strictly_increasing() { "yes" } else { "no" })
        .kv("disagreements", report.disagreements()))
}

pub fn evaluate_shapes(ctx: &Ctx, generator: &Network<f32>, oracle: &Path) -> Result<Summary> {
    let cfg = &ctx.cfg;
    let oracle = load_net(oracle)?;
    let n = cfg.report.fidelity_n;
    let fid = label_fidelity(generator, &oracle, n, cfg.seed)?;
    let train = shape_gan_data(cfg)?;
    let mut min_dist = f64::INFINITY;
    for label in 0..ShapeClass::COUNT {
        for im in generate(generator, label, cfg.report.n, cfg.seed ^ 0x6e6f_7665)? {
            min_dist = min_dist.min(novelty_check(&im, &train)?);
        }
    }
    let out = ctx.out()?;
    let mut w = create(&out.join("fidelity.csv"))?;
    writeln!(w, "label,fidelity")?;
    for (c, f) in ShapeClass::ALL.iter().zip(&fid) {
        writeln!(w, "{},{f:.4}", c.name())?;
    }
    w.flush()?;
    let mean = if fid.is_empty() { f64::NAN } else { fid.iter().sum::<f64>() / fid.len() as f64 };
    Ok(Summary::new("evaluate")
        .kv("model", "shapes")
        .kv("n", n)
        .f("fidelity_mean", mean)
        .f("min_novelty", min_dist))
}

pub fn evaluate_cmd(ctx: &Ctx, cnn: Option<&Path>, generator: Option<&Path>, oracle: Option<&Path>) -> Result<Summary> {
    match (cnn, generator) {
        (Some(c), None) => evaluate_cnn(ctx, c),
        (None, Some(g)) => {
            let net = load_net(g)?;
            match (generator_classes(&net)?, oracle) {
                (PerformanceLabel::COUNT, _) => evaluate_facade(ctx, &net),
                (_, Some(o)) => evaluate_shapes(ctx, &net, o),
                (_, None) => usage("a shape generator needs --oracle <cnn checkpoint>"),
            }
        }
        _ => usage("give exactly one of --cnn or --generator"),
    }
}

fn stage(ctx: &Ctx, sub: &str) -> Ctx {
    let mut cfg = ctx.cfg.clone();
    cfg.out = ctx.cfg.out.join(sub);
    Ctx { cfg, ascii_plot: ctx.ascii_plot }
}

/// Full chain: shapes, classifier, shape GAN with fidelity, facades, facade
/// GAN and the label report. Every artifact goes under its own subdirectory.
pub fn pipeline(ctx: &Ctx) -> Result<Summary> {
    if ctx.cfg.data.is_some() {
        return usage("pipeline synthesizes its own datasets; drop `data`");
    }
    let mut stages = 0;
    let mut run = |s: Summary| {
        println!("{s}");
        stages += 1;
    };
    let shapes = stage(ctx, "shapes");
    run(synth_shapes(&shapes, ctx.cfg.shapes.freehand)?);
    let cnn = stage(ctx, "cnn");
    let cnn_summary = train_cnn(&cnn)?;
    run(cnn_summary);
    let sgan = stage(ctx, "shape_gan");
    run(train_gan(&sgan, GanKind::Shapes)?);
    let sgen = load_net(&sgan.cfg.out.join("generator.gdl"))?;
    run(evaluate_shapes(&sgan, &sgen, &cnn.cfg.out.join("cnn.gdl"))?);
    let facade = stage(ctx, "facade");
    run(synth_facade(&facade)?);
    let fgan = stage(ctx, "facade_gan");
    run(train_gan(&fgan, GanKind::Facade)?);
    let report = stage(ctx, "report");
    let fgen = load_net(&fgan.cfg.out.join("generator.gdl"))?;
    run(evaluate_facade(&report, &fgen)?);
    let out: PathBuf = ctx.cfg.out.clone();
    Ok(Summary::new("pipeline").kv("stages", stages).kv("out", out.display()))
}

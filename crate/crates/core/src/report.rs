//! Label-by-label comparison of generated facades against the reference
//! dataset: generated WWR and surrogate sDA next to the reference ranges, with
//! the label each measure predicts.

use std::io::Write;

use crate::acgan::{generate, generator_classes};
use crate::dataset::csv_err;
use crate::daylight::{label_of, FacadeDataset, FacadePattern, PerformanceLabel, SdaEvaluator};
use crate::error::{Error, Result};
use crate::imageproc::postprocess_facade;
use crate::nn::{Layer, Network};
use crate::rng::derive_seed;

/// WWR and sDA spans of one label in the reference dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceRange {
    pub wwr: (f64, f64),
    pub sda: (f64, f64),
}

/// Per-label ranges measured on a facade dataset; `None` for empty labels.
pub fn reference_ranges(ds: &FacadeDataset) -> Vec<Option<ReferenceRange>> {
    ds.label_ranges()
        .into_iter()
        .map(|r| r.map(|(wwr, sda)| ReferenceRange { wwr, sda }))
        .collect()
}

fn midpoint(r: (f64, f64)) -> f64 {
    0.5 * (r.0 + r.1)
}

fn gap(r: (f64, f64), v: f64) -> f64 {
    if v < r.0 {
        r.0 - v
    } else if v > r.1 {
        v - r.1
    } else {
        0.0
    }
}

/// Label whose reference WWR range contains `wwr`; among several, the one with
/// the nearest midpoint; with none, the nearest range. Ties go to the lower label.
pub fn predict_label_by_wwr(wwr: f64, ranges: &[Option<ReferenceRange>]) -> Result<PerformanceLabel> {
    if !wwr.is_finite() {
        return Err(Error::invalid("WWR must be finite"));
    }
    let defined: Vec<(usize, (f64, f64))> = ranges
        .iter()
        .take(PerformanceLabel::COUNT)
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r.wwr)))
        .collect();
    let key = |&(_, r): &(usize, (f64, f64))| (gap(r, wwr), (midpoint(r) - wwr).abs());
    let best = defined
        .iter()
        .min_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite keys"))
        .ok_or_else(|| Error::invalid("no reference WWR ranges"))?;
    Ok(PerformanceLabel::from_index(best.0).expect("index below COUNT"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1Row {
    pub label: PerformanceLabel,
    pub reference: Option<ReferenceRange>,
    /// Mean over the post-processed samples of this label.
    pub wwr_pct: f64,
    pub sda_pct: f64,
    pub wwr_label: PerformanceLabel,
    pub sda_label: PerformanceLabel,
    pub samples: usize,
}

impl Table1Row {
    pub fn agrees(&self) -> bool {
        self.wwr_label == self.label && self.sda_label == self.label
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
}

impl Table1Report {
    /// Generated WWR strictly increases from the first label to the last.
    pub fn wwr_strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].wwr_pct > w[0].wwr_pct)
    }

    pub fn disagreements(&self) -> usize {
        self.rows.iter().filter(|r| !r.agrees()).count()
    }

    /// CSV header: `label,ref_wwr_min,ref_wwr_max,ref_sda_min,ref_sda_max,
    /// gen_wwr_pct,gen_sda_pct,wwr_label,sda_label,samples`. Missing
    /// reference ranges are left empty.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "label",
            "ref_wwr_min",
            "ref_wwr_max",
            "ref_sda_min",
            "ref_sda_max",
            "gen_wwr_pct",
            "gen_sda_pct",
            "wwr_label",
            "sda_label",
            "samples",
        ])
        .map_err(csv_err)?;
        let f2 = |v: f64| format!("{v:.2}");
        for r in &self.rows {
            let refs = match r.reference {
                Some(rr) => [f2(rr.wwr.0), f2(rr.wwr.1), f2(rr.sda.0), f2(rr.sda.1)],
                None => Default::default(),
            };
            let mut rec = vec![r.label.to_string()];
            rec.extend(refs);
            rec.extend([
                f2(r.wwr_pct),
                f2(r.sda_pct),
                r.wwr_label.to_string(),
                r.sda_label.to_string(),
                r.samples.to_string(),
            ]);
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

// A generator whose batch-norm running statistics are still at their initial
// values has never seen a training batch.
fn is_untrained(generator: &Network<f32>) -> bool {
    let mut any_bn = false;
    for layer in generator.layers() {
        if let Layer::BatchNorm(bn) = layer {
            any_bn = true;
            let fresh = bn.running_mean.data().iter().all(|&v| v == 0.0)
                && bn.running_var.data().iter().all(|&v| v == 1.0);
            if !fresh {
                return false;
            }
        }
    }
    any_bn
}

/// Generates `n` samples per label, post-processes each (binarize, ratio-
/// preserving clean, snap to grid), and reports mean WWR and surrogate sDA per
/// label with both predicted labels. Also returns the snapped patterns.
pub fn make_table1_report(
    generator: &Network<f32>,
    n: usize,
    seed: u64,
    evaluator: &SdaEvaluator,
    ranges: &[Option<ReferenceRange>],
) -> Result<(Table1Report, Vec<Vec<FacadePattern>>)> {
    if n == 0 {
        return Err(Error::invalid("report needs at least one sample per label"));
    }
    if generator_classes(generator)? != PerformanceLabel::COUNT {
        return Err(Error::invalid("facade generator must have 5 labels"));
    }
    if is_untrained(generator) {
        return Err(Error::invalid("generator has not been trained"));
    }
    let mut rows = Vec::with_capacity(PerformanceLabel::COUNT);
    let mut patterns = Vec::with_capacity(PerformanceLabel::COUNT);
    for label in PerformanceLabel::ALL {
        let imgs = generate(generator, label.index(), n, derive_seed(seed, label.index() as u64))?;
        let pats = imgs.iter().map(postprocess_facade).collect::<Result<Vec<_>>>()?;
        let wwr_pct = pats.iter().map(|p| p.wwr_pct()).sum::<f64>() / n as f64;
        let sda_pct = pats.iter().map(|p| evaluator.evaluate(p).sda_pct).sum::<f64>() / n as f64;
        rows.push(Table1Row {
            label,
            reference: ranges.get(label.index()).copied().flatten(),
            wwr_pct,
            sda_pct,
            wwr_label: predict_label_by_wwr(wwr_pct, ranges)?,
            sda_label: label_of(sda_pct)?,
            samples: n,
        });
        patterns.push(pats);
    }
    Ok((Table1Report { rows }, patterns))
}

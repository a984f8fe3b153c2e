use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use super::illuminance::SdaEvaluator;
use super::pattern::{FacadePattern, CELLS};
use super::solar::SkySchedule;
use super::{PerformanceLabel, RoomModel};
use crate::dataset::{csv_err, LabeledDataset, ManifestRecord};
use crate::error::{Error, Result};
use crate::pgm;
use crate::rng::{stream_rng, STREAM_FACADE};

/// Nested patterns per seed: 1 to 143 open cells.
pub const RUNS_PER_SEED: usize = CELLS - 1;

/// Seeded cell permutation; run `k` opens its first `k + 1` cells.
pub fn run_sequence(seed: u64) -> Vec<FacadePattern> {
    let mut order: Vec<usize> = (0..CELLS).collect();
    order.shuffle(&mut stream_rng(seed, STREAM_FACADE));
    let mut p = FacadePattern::closed();
    let mut out = Vec::with_capacity(RUNS_PER_SEED);
    for &cell in order.iter().take(RUNS_PER_SEED) {
        p.set(cell / super::COLS, cell % super::COLS, true);
        out.push(p.clone());
    }
    out
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FacadeRecord {
    pub seed: u64,
    pub run: usize,
    pub wwr_pct: f64,
    pub sda_pct: f64,
    pub label: char,
    pub filename: String,
}

/// Rasterised run sequences with their daylight performance.
#[derive(Clone, Debug, PartialEq)]
pub struct FacadeDataset {
    pub dataset: LabeledDataset,
    pub patterns: Vec<FacadePattern>,
    pub records: Vec<FacadeRecord>,
}

impl FacadeDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Min/max WWR and sDA over the patterns of each label; `None` for empty labels.
    pub fn label_ranges(&self) -> Vec<Option<((f64, f64), (f64, f64))>> {
        PerformanceLabel::ALL
            .iter()
            .map(|l| {
                let rows: Vec<_> = self.records.iter().filter(|r| r.label == l.letter()).collect();
                if rows.is_empty() {
                    return None;
                }
                let fold = |f: fn(&FacadeRecord) -> f64| {
                    rows.iter()
                        .map(|r| f(r))
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
                };
                Some((fold(|r| r.wwr_pct), fold(|r| r.sda_pct)))
            })
            .collect()
    }

    /// Manifest CSV `seed,run,wwr_pct,sda_pct,label,filename`.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        if self.records.is_empty() {
            w.write_record(["seed", "run", "wwr_pct", "sda_pct", "label", "filename"])
                .map_err(csv_err)?;
        }
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes PGM rasters, `.txt` patterns and `manifest.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for ((im, _), (rec, pat)) in self.dataset.samples().iter().zip(self.records.iter().zip(&self.patterns)) {
            pgm::write(dir.join(&rec.filename), im)?;
            fs::write(dir.join(rec.filename.replace(".pgm", ".txt")), pat.to_text())?;
        }
        self.write_manifest(dir.join(crate::dataset::MANIFEST_FILE))
    }

    /// Reads a directory written by [`save`](Self::save); patterns come from the `.txt` files.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut rdr = csv::Reader::from_path(dir.join(crate::dataset::MANIFEST_FILE)).map_err(csv_err)?;
        let mut out = Self {
            dataset: LabeledDataset::new(PerformanceLabel::COUNT),
            patterns: Vec::new(),
            records: Vec::new(),
        };
        for rec in rdr.deserialize() {
            let rec: FacadeRecord = rec.map_err(csv_err)?;
            if rec.filename.contains(['/', '\\']) || rec.filename.starts_with('.') {
                return Err(Error::format("facade manifest", format!("unsafe filename {:?}", rec.filename)));
            }
            let label: PerformanceLabel = rec.label.to_string().parse()?;
            let pat = FacadePattern::from_text(&fs::read_to_string(dir.join(rec.filename.replace(".pgm", ".txt")))?)?;
            let im = pgm::read(dir.join(&rec.filename))?;
            out.dataset.push(
                im,
                ManifestRecord {
                    filename: rec.filename.clone(),
                    label: label.index(),
                    seed: rec.seed,
                },
            )?;
            out.patterns.push(pat);
            out.records.push(rec);
        }
        Ok(out)
    }
}

/// Every run of every seed, rasterised to 72 x 32 and labelled by surrogate sDA.
pub fn synth_facade_dataset(seeds: &[u64], schedule: &SkySchedule) -> Result<FacadeDataset> {
    if seeds.is_empty() {
        return Err(Error::invalid("facade dataset needs at least one seed"));
    }
    let eval = SdaEvaluator::new(&RoomModel::default(), schedule)?;
    let mut out = FacadeDataset {
        dataset: LabeledDataset::new(PerformanceLabel::COUNT),
        patterns: Vec::with_capacity(seeds.len() * RUNS_PER_SEED),
        records: Vec::with_capacity(seeds.len() * RUNS_PER_SEED),
    };
    for &seed in seeds {
        for (run, pat) in run_sequence(seed).into_iter().enumerate() {
            let sda = eval.evaluate(&pat);
            let filename = format!("facade_s{seed}_r{run:03}.pgm");
            out.dataset.push(
                pat.to_image(),
                ManifestRecord {
                    filename: filename.clone(),
                    label: sda.label.index(),
                    seed,
                },
            )?;
            out.records.push(FacadeRecord {
                seed,
                run,
                wwr_pct: pat.wwr_pct(),
                sda_pct: sda.sda_pct,
                label: sda.label.letter(),
                filename,
            });
            out.patterns.push(pat);
        }
    }
    Ok(out)
}

//! Labelled image collections and their on-disk form: one PGM per sample plus a
//! `manifest.csv` with header `filename,label,seed`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::pgm;
use crate::rng::{stream_rng, STREAM_SUBSET};

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub filename: String,
    pub label: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    num_classes: usize,
    samples: Vec<(ImageGrid, usize)>,
    manifest: Vec<ManifestRecord>,
}

impl LabeledDataset {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            samples: Vec::new(),
            manifest: Vec::new(),
        }
    }

    pub fn push(&mut self, image: ImageGrid, record: ManifestRecord) -> Result<()> {
        if record.label >= self.num_classes {
            return Err(Error::invalid(format!(
                "label {} outside 0..{}",
                record.label, self.num_classes
            )));
        }
        if let Some((first, _)) = self.samples.first() {
            if !first.same_size(&image) {
                return Err(Error::shape(format!(
                    "{}x{} image in a {}x{} dataset",
                    image.height(),
                    image.width(),
                    first.height(),
                    first.width()
                )));
            }
        }
        self.samples.push((image, record.label));
        self.manifest.push(record);
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(ImageGrid, usize)] {
        &self.samples
    }

    pub fn manifest(&self) -> &[ManifestRecord] {
        &self.manifest
    }

    pub fn image(&self, i: usize) -> &ImageGrid {
        &self.samples[i].0
    }

    pub fn label(&self, i: usize) -> usize {
        self.samples[i].1
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// `(height, width)` of the samples, `None` when empty.
    pub fn image_size(&self) -> Option<(usize, usize)> {
        self.samples.first().map(|(im, _)| (im.height(), im.width()))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for (_, l) in &self.samples {
            counts[*l] += 1;
        }
        counts
    }

    /// New dataset holding the given samples in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Self::new(self.num_classes);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("index {i} out of range for {} samples", self.len())));
            }
            out.samples.push(self.samples[i].clone());
            out.manifest.push(self.manifest[i].clone());
        }
        Ok(out)
    }

    /// Seeded draw of `n` distinct samples, kept in their original order.
    pub fn random_subset(&self, n: usize, seed: u64) -> Result<Self> {
        if n > self.len() {
            return Err(Error::invalid(format!("subset of {n} from {} samples", self.len())));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut stream_rng(seed, STREAM_SUBSET));
        idx.truncate(n);
        idx.sort_unstable();
        self.subset(&idx)
    }

    /// Applies `f` to every image, keeping labels and manifest.
    pub fn map_images(&self, f: impl Fn(&ImageGrid) -> ImageGrid) -> Result<Self> {
        let mut out = Self::new(self.num_classes);
        for ((im, _), rec) in self.samples.iter().zip(&self.manifest) {
            out.push(f(im), rec.clone())?;
        }
        Ok(out)
    }

    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        if self.manifest.is_empty() {
            w.write_record(["filename", "label", "seed"]).map_err(csv_err)?;
        }
        for r in &self.manifest {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes every image as PGM into `dir` and the manifest alongside.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for ((im, _), rec) in self.samples.iter().zip(&self.manifest) {
            pgm::write(dir.join(&rec.filename), im)?;
        }
        self.write_manifest(dir.join(MANIFEST_FILE))
    }

    /// Reads a directory written by [`save`](Self::save).
    pub fn load(dir: impl AsRef<Path>, num_classes: usize) -> Result<Self> {
        let dir = dir.as_ref();
        let mut rdr = csv::Reader::from_path(dir.join(MANIFEST_FILE)).map_err(csv_err)?;
        let mut out = Self::new(num_classes);
        for rec in rdr.deserialize() {
            let rec: ManifestRecord = rec.map_err(csv_err)?;
            if rec.filename.contains(['/', '\\']) || rec.filename.starts_with('.') {
                return Err(Error::format("manifest", format!("unsafe filename {:?}", rec.filename)));
            }
            let im = pgm::read(dir.join(&rec.filename))?;
            out.push(im, rec)?;
        }
        Ok(out)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format("csv", format!("{other:?}")),
    }
}

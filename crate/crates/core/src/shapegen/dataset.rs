use super::raster::rasterize;
use super::sample::{freehand_polygon, sample_polygon, FreehandSpec};
use super::{JitterSpec, ShapeClass};
use crate::dataset::{LabeledDataset, ManifestRecord};
use crate::error::Result;
use crate::image::DEFAULT_SIZE;
use crate::rng::{derive_seed, STREAM_FREEHAND, STREAM_SHAPES};

/// `6 * n_per_class` rasterised 100x100 shapes, interleaved by class
/// (I, L, Rectangle, Square, T, Z, I, ...).
pub fn synth_dataset(n_per_class: usize, jitter: JitterSpec, seed: u64) -> Result<LabeledDataset> {
    jitter.validate()?;
    let base = derive_seed(seed, STREAM_SHAPES);
    let mut ds = LabeledDataset::new(ShapeClass::COUNT);
    for i in 0..n_per_class {
        for class in ShapeClass::ALL {
            let s = derive_seed(base, (i * ShapeClass::COUNT + class.index()) as u64);
            let poly = sample_polygon(class, jitter, s)?;
            let r = rasterize(&poly, DEFAULT_SIZE)?;
            ds.push(
                r.image,
                ManifestRecord {
                    filename: format!("{}_{:05}.pgm", class.name(), i),
                    label: class.index(),
                    seed: s,
                },
            )?;
        }
    }
    Ok(ds)
}

/// `n` freehand-style shapes cycling through the classes.
pub fn freehand_dataset(n: usize, seed: u64) -> Result<LabeledDataset> {
    freehand_dataset_with(n, &FreehandSpec::default(), seed)
}

pub fn freehand_dataset_with(n: usize, spec: &FreehandSpec, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(crate::Error::invalid("freehand set needs n >= 1"));
    }
    let base = derive_seed(seed, STREAM_FREEHAND);
    let mut ds = LabeledDataset::new(ShapeClass::COUNT);
    for i in 0..n {
        let class = ShapeClass::ALL[i % ShapeClass::COUNT];
        let s = derive_seed(base, i as u64);
        let poly = freehand_polygon(class, spec, s)?;
        let r = rasterize(&poly, DEFAULT_SIZE)?;
        ds.push(
            r.image,
            ManifestRecord {
                filename: format!("freehand_{:03}_{}.pgm", i, class.name()),
                label: class.index(),
                seed: s,
            },
        )?;
    }
    Ok(ds)
}

//! Generative-design toolkit: parametric shape and facade datasets, a small
//! sequential neural-network engine, a CNN shape classifier, an auxiliary-classifier
//! GAN, a deterministic daylight (sDA) surrogate and binary-image post-processing.
//!
//! Everything is seeded; equal inputs and seeds give bit-identical outputs.

pub mod acgan;
pub mod classifier;
pub mod dataset;
pub mod daylight;
pub mod error;
pub mod image;
pub mod imageproc;
pub mod nn;
pub mod pgm;
pub mod report;
pub mod rng;
pub mod shapegen;

pub use dataset::{LabeledDataset, ManifestRecord};
pub use error::{Error, Result};
pub use image::ImageGrid;

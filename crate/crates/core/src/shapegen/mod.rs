//! Parametric 2-D shape synthesis: canonical templates for six plan-outline
//! classes, seeded corner/mid-edge jitter, binary rasterisation and labelled
//! dataset generation.

mod dataset;
mod polygon;
mod raster;
mod sample;
mod stats;
mod template;

use std::fmt;
use std::str::FromStr;

pub use dataset::{freehand_dataset, freehand_dataset_with, synth_dataset};
pub use polygon::Polygon;
pub use raster::{rasterize, Rasterized};
pub use sample::{freehand_polygon, sample_polygon, sample_shape, FreehandSpec, SampledShape, MAX_ATTEMPTS};
pub use stats::{class_envelope, shape_stats, Envelope, ShapeStats};
pub use template::{canonical_template, FRAME};

use crate::error::{Error, Result};

/// Shape label. The integer encoding follows alphabetical order of the names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapeClass {
    I = 0,
    L = 1,
    Rectangle = 2,
    Square = 3,
    T = 4,
    Z = 5,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 6] = [
        ShapeClass::I,
        ShapeClass::L,
        ShapeClass::Rectangle,
        ShapeClass::Square,
        ShapeClass::T,
        ShapeClass::Z,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::I => "i",
            ShapeClass::L => "l",
            ShapeClass::Rectangle => "rectangle",
            ShapeClass::Square => "square",
            ShapeClass::T => "t",
            ShapeClass::Z => "z",
        }
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(i) = lower.parse::<usize>() {
            return Self::from_index(i).ok_or_else(|| Error::invalid(format!("shape label {i} out of range")));
        }
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == lower || (lower.len() > 1 && lower.trim_end_matches("-shape") == c.name()))
            .ok_or_else(|| Error::invalid(format!("unknown shape class {s:?}")))
    }
}

/// Random variation applied to a template.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterSpec {
    /// Radius (px) of the disc each corner may move within.
    pub corner_radius: f64,
    /// Maximum axis-aligned displacement (px) of mid-edge points.
    pub edge_nudge: f64,
    /// Closed interval of scale factors applied about the frame centre.
    pub scale_range: (f64, f64),
}

impl JitterSpec {
    pub const NONE: JitterSpec = JitterSpec {
        corner_radius: 0.0,
        edge_nudge: 0.0,
        scale_range: (1.0, 1.0),
    };

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if !(self.corner_radius >= 0.0 && self.edge_nudge >= 0.0) {
            return Err(Error::invalid("jitter magnitudes must be >= 0"));
        }
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(format!("scale range [{lo}, {hi}] not within (0, 1]")));
        }
        Ok(())
    }
}

impl Default for JitterSpec {
    fn default() -> Self {
        Self {
            corner_radius: 4.0,
            edge_nudge: 3.0,
            scale_range: (0.5, 1.0),
        }
    }
}

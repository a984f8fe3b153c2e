//! TOML experiment configuration. Every key is optional; command-line flags
//! override file values, which override the defaults below.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    ShapesCnn,
    ShapesAcgan,
    FacadeAcgan,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ShapesSection {
    pub per_class: usize,
    pub freehand: usize,
}

impl Default for ShapesSection {
    fn default() -> Self {
        Self { per_class: 1000, freehand: 45 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CnnSection {
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for CnnSection {
    fn default() -> Self {
        Self { epochs: 10, batch_size: 20 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeGanSection {
    pub steps: usize,
    pub batch_size: usize,
    /// Side of the square training canvas.
    pub image_size: usize,
    /// Training images drawn from the shape dataset; 0 uses all of them.
    pub subset: usize,
    pub snapshot_interval: usize,
}

impl Default for ShapeGanSection {
    fn default() -> Self {
        Self { steps: 5000, batch_size: 32, image_size: 64, subset: 2616, snapshot_interval: 250 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FacadeGanSection {
    pub steps: usize,
    pub batch_size: usize,
    pub snapshot_interval: usize,
}

impl Default for FacadeGanSection {
    fn default() -> Self {
        Self { steps: 12000, batch_size: 5, snapshot_interval: 250 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FacadeSection {
    pub seeds: Vec<u64>,
}

impl Default for FacadeSection {
    fn default() -> Self {
        Self { seeds: vec![0, 1, 2, 3] }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Samples per label for the facade report and generation.
    pub n: usize,
    /// Samples per label for shape-generator fidelity.
    pub fidelity_n: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { n: 16, fidelity_n: 50 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    pub data: Option<PathBuf>,
    pub shapes: ShapesSection,
    pub cnn: CnnSection,
    pub shape_gan: ShapeGanSection,
    pub facade: FacadeSection,
    pub facade_gan: FacadeGanSection,
    pub report: ReportSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::default(),
            seed: 42,
            out: PathBuf::from("out"),
            data: None,
            shapes: ShapesSection::default(),
            cnn: CnnSection::default(),
            shape_gan: ShapeGanSection::default(),
            facade: FacadeSection::default(),
            facade_gan: FacadeGanSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

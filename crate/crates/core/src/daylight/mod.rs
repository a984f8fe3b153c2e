//! Analytic daylight surrogate for a south-facing facade.
//!
//! A 10 x 10 x 4 m room has an 18 x 8 grid of 0.5 m facade cells on its
//! south wall. Cell rows span 0-4 m in height and the 0.5 m margin is applied
//! horizontally only (cells cover x = 0.5-9.5 m). Illuminance at a 16 x 16
//! work-plane grid is the sum of a point-source sky term through every open
//! cell and a direct-sun term when the solar ray passes through an open cell.
//! sDA(300 lx, 50 %) is derived from a 132-step schedule (15th of each month,
//! solar hours 8-18) at latitude 29.76 N.

mod facade;
mod illuminance;
mod pattern;
mod solar;

pub use facade::{run_sequence, synth_facade_dataset, FacadeDataset, FacadeRecord, RUNS_PER_SEED};
pub use illuminance::{
    compute_sda, diffuse_from_cell, direct_hit_cell, sensor_illuminance, SdaEvaluator, SdaResult,
    SDA_DA_FRACTION, SDA_LUX_THRESHOLD,
};
pub use pattern::{FacadePattern, CELLS, COLS, PX_PER_CELL, ROWS};
pub use solar::{day_of_year, sun_position, SkySchedule, SunPosition, Timestep, HOUSTON_LATITUDE};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Room geometry. Coordinates: x east, y north (into the room from the
/// facade plane y = 0), z up; metres.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomModel {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub cell_size: f64,
    /// Horizontal inset of the cell grid from the east and west walls.
    pub margin: f64,
    pub sensor_height: f64,
    pub sensor_spacing: f64,
    /// Sensors per side of the square work-plane grid.
    pub sensors_per_side: usize,
}

impl Default for RoomModel {
    fn default() -> Self {
        Self {
            width: 10.0,
            depth: 10.0,
            height: 4.0,
            cell_size: 0.5,
            margin: 0.5,
            sensor_height: 0.75,
            sensor_spacing: 0.6,
            sensors_per_side: 16,
        }
    }
}

impl RoomModel {
    /// Cell extent `(x0, x1, z0, z1)`; row 0 is the top row.
    pub fn cell_rect(&self, row: usize, col: usize) -> (f64, f64, f64, f64) {
        let x0 = self.margin + col as f64 * self.cell_size;
        let z1 = self.height - row as f64 * self.cell_size;
        (x0, x0 + self.cell_size, z1 - self.cell_size, z1)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 3] {
        let (x0, x1, z0, z1) = self.cell_rect(row, col);
        [(x0 + x1) / 2.0, 0.0, (z0 + z1) / 2.0]
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors_per_side * self.sensors_per_side
    }

    /// Sensor positions, row-major from the facade inwards, west to east.
    pub fn sensors(&self) -> Vec<[f64; 3]> {
        let span = (self.sensors_per_side - 1) as f64 * self.sensor_spacing;
        let x0 = (self.width - span) / 2.0;
        let y0 = (self.depth - span) / 2.0;
        let mut out = Vec::with_capacity(self.sensor_count());
        for i in 0..self.sensors_per_side {
            for j in 0..self.sensors_per_side {
                out.push([
                    x0 + j as f64 * self.sensor_spacing,
                    y0 + i as f64 * self.sensor_spacing,
                    self.sensor_height,
                ]);
            }
        }
        out
    }

    /// `(row, col)` of the cell containing facade point `(x, z)`, if any.
    pub fn cell_at(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        let c = (x - self.margin) / self.cell_size;
        let r = (self.height - z) / self.cell_size;
        if c < 0.0 || r < 0.0 {
            return None;
        }
        let (c, r) = (c.floor() as usize, r.floor() as usize);
        (c < COLS && r < ROWS).then_some((r, c))
    }

    pub fn validate(&self) -> Result<()> {
        let grid_w = 2.0 * self.margin + COLS as f64 * self.cell_size;
        let grid_h = ROWS as f64 * self.cell_size;
        if (grid_w - self.width).abs() > 1e-9 || grid_h > self.height + 1e-9 {
            return Err(Error::invalid("facade grid does not fit the wall"));
        }
        let span = (self.sensors_per_side.max(1) - 1) as f64 * self.sensor_spacing;
        if self.sensors_per_side == 0 || span >= self.width || span >= self.depth {
            return Err(Error::invalid("sensor grid does not fit the floor"));
        }
        Ok(())
    }
}

/// sDA performance bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerformanceLabel {
    A = 0,
    B = 1,
    C = 2,
    D = 3,
    E = 4,
}

impl PerformanceLabel {
    pub const ALL: [PerformanceLabel; 5] = [
        PerformanceLabel::A,
        PerformanceLabel::B,
        PerformanceLabel::C,
        PerformanceLabel::D,
        PerformanceLabel::E,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    /// sDA interval `[lo, hi)`; E is closed at 100.
    pub fn sda_range(self) -> (f64, f64) {
        let lo = 20.0 * self.index() as f64;
        (lo, lo + 20.0)
    }
}

impl fmt::Display for PerformanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for PerformanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" | "0" => Ok(Self::A),
            "B" | "1" => Ok(Self::B),
            "C" | "2" => Ok(Self::C),
            "D" | "3" => Ok(Self::D),
            "E" | "4" => Ok(Self::E),
            _ => Err(Error::invalid(format!("unknown performance label {s:?}"))),
        }
    }
}

/// Bucket of an sDA percentage: `[0,20) A, [20,40) B, [40,60) C, [60,80) D, [80,100] E`.
pub fn label_of(sda: f64) -> Result<PerformanceLabel> {
    if !(0.0..=100.0).contains(&sda) {
        return Err(Error::invalid(format!("sDA {sda} outside [0, 100]")));
    }
    let i = ((sda / 20.0).floor() as usize).min(4);
    Ok(PerformanceLabel::ALL[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn room_fits() {
        let room = RoomModel::default();
        room.validate().unwrap();
        let s = room.sensors();
        assert_eq!(s.len(), 256);
        assert!((s[0][0] - 0.5).abs() < 1e-12 && (s[255][1] - 9.5).abs() < 1e-12);
        assert_eq!(room.cell_rect(0, 0), (0.5, 1.0, 3.5, 4.0));
        assert_eq!(room.cell_rect(7, 17), (9.0, 9.5, 0.0, 0.5));
        assert_eq!(room.cell_at(0.75, 3.9), Some((0, 0)));
        assert_eq!(room.cell_at(0.4, 3.9), None);
        assert_eq!(room.cell_at(9.6, 1.0), None);
        assert_eq!(room.cell_at(5.0, 4.1), None);
    }

    #[test]
    fn label_buckets() {
        assert_eq!(label_of(0.0).unwrap(), PerformanceLabel::A);
        assert_eq!(label_of(12.8).unwrap(), PerformanceLabel::A);
        assert_eq!(label_of(19.999).unwrap(), PerformanceLabel::A);
        assert_eq!(label_of(20.0).unwrap(), PerformanceLabel::B);
        assert_eq!(label_of(59.9).unwrap(), PerformanceLabel::C);
        assert_eq!(label_of(80.0).unwrap(), PerformanceLabel::E);
        assert_eq!(label_of(100.0).unwrap(), PerformanceLabel::E);
        assert!(label_of(-0.1).is_err() && label_of(100.01).is_err() && label_of(f64::NAN).is_err());
        assert_eq!("c".parse::<PerformanceLabel>().unwrap(), PerformanceLabel::C);
    }
}

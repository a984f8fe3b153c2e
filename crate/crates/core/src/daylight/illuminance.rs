use std::f64::consts::PI;

use super::pattern::{FacadePattern, CELLS, COLS};
use super::solar::{SkySchedule, SunPosition, Timestep};
use super::{label_of, PerformanceLabel, RoomModel};
use crate::error::{Error, Result};

pub const SDA_LUX_THRESHOLD: f64 = 300.0;
pub const SDA_DA_FRACTION: f64 = 0.5;

// Sky contribution of one cell per unit vertical facade illuminance:
// A cos(theta_cell) cos(theta_sensor) / (pi r^2), clipped at zero.
fn unit_diffuse(center: [f64; 3], area: f64, sensor: [f64; 3]) -> f64 {
    let d = [sensor[0] - center[0], sensor[1] - center[1], sensor[2] - center[2]];
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let r = r2.sqrt();
    let cos_cell = d[1] / r;
    let cos_sensor = -d[2] / r;
    if cos_cell <= 0.0 || cos_sensor <= 0.0 {
        return 0.0;
    }
    area * cos_cell * cos_sensor / (PI * r2)
}

/// Point-source sky illuminance at `sensor` from cell `(row, col)` given a
/// vertical facade illuminance `edv_lux` (cell luminance `edv / pi`).
pub fn diffuse_from_cell(room: &RoomModel, row: usize, col: usize, sensor: [f64; 3], edv_lux: f64) -> f64 {
    edv_lux * unit_diffuse(room.cell_center(row, col), room.cell_area(), sensor)
}

/// Cell the sensor-to-sun ray passes through, if the sun is up and on the
/// facade side.
pub fn direct_hit_cell(room: &RoomModel, sensor: [f64; 3], sun: &SunPosition) -> Option<(usize, usize)> {
    if sun.altitude_deg <= 0.0 || !(sun.azimuth_deg > 90.0 && sun.azimuth_deg < 270.0) {
        return None;
    }
    let dir = sun.direction();
    if dir[1] >= 0.0 {
        return None;
    }
    let t = -sensor[1] / dir[1];
    room.cell_at(sensor[0] + t * dir[0], sensor[2] + t * dir[2])
}

/// Total illuminance (lux) at one sensor and timestep.
pub fn sensor_illuminance(room: &RoomModel, pattern: &FacadePattern, sensor_index: usize, step: &Timestep) -> f64 {
    let sensor = room.sensors()[sensor_index];
    let mut unit = 0.0;
    for (i, &open) in pattern.cells().iter().enumerate() {
        if open {
            unit += unit_diffuse(room.cell_center(i / COLS, i % COLS), room.cell_area(), sensor);
        }
    }
    let direct = match direct_hit_cell(room, sensor, &step.sun) {
        Some((r, c)) if pattern.is_open(r, c) => step.dni_lux * step.sun.altitude_deg.to_radians().sin(),
        _ => 0.0,
    };
    step.edv_lux * unit + direct
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdaResult {
    /// Fraction of timesteps at or above 300 lux, per sensor.
    pub da: Vec<f64>,
    pub sda_pct: f64,
    pub label: PerformanceLabel,
}

/// Precomputed sensor/cell coupling for repeated sDA evaluation on one room
/// and schedule. Results equal [`sensor_illuminance`] bit for bit.
#[derive(Clone, Debug)]
pub struct SdaEvaluator {
    n_sensors: usize,
    n_steps: usize,
    // [sensor][cell]
    coupling: Vec<f64>,
    // [sensor][step]; CELLS = no hit
    hits: Vec<u16>,
    edv: Vec<f64>,
    direct: Vec<f64>,
}

impl SdaEvaluator {
    pub fn new(room: &RoomModel, schedule: &SkySchedule) -> Result<Self> {
        if schedule.is_empty() {
            return Err(Error::invalid("empty sky schedule"));
        }
        room.validate()?;
        let sensors = room.sensors();
        let mut coupling = Vec::with_capacity(sensors.len() * CELLS);
        let mut hits = Vec::with_capacity(sensors.len() * schedule.len());
        for &s in &sensors {
            for i in 0..CELLS {
                coupling.push(unit_diffuse(room.cell_center(i / COLS, i % COLS), room.cell_area(), s));
            }
            for step in &schedule.steps {
                hits.push(match direct_hit_cell(room, s, &step.sun) {
                    Some((r, c)) => (r * COLS + c) as u16,
                    None => CELLS as u16,
                });
            }
        }
        Ok(Self {
            n_sensors: sensors.len(),
            n_steps: schedule.len(),
            coupling,
            hits,
            edv: schedule.steps.iter().map(|s| s.edv_lux).collect(),
            direct: schedule
                .steps
                .iter()
                .map(|s| s.dni_lux * s.sun.altitude_deg.to_radians().sin())
                .collect(),
        })
    }

    /// Illuminance at every timestep for one sensor.
    pub fn sensor_series(&self, pattern: &FacadePattern, sensor: usize) -> Vec<f64> {
        let cells = pattern.cells();
        let row = &self.coupling[sensor * CELLS..(sensor + 1) * CELLS];
        let mut unit = 0.0;
        for (i, &open) in cells.iter().enumerate() {
            if open {
                unit += row[i];
            }
        }
        let hits = &self.hits[sensor * self.n_steps..(sensor + 1) * self.n_steps];
        (0..self.n_steps)
            .map(|t| {
                let h = hits[t] as usize;
                let direct = if h < CELLS && cells[h] { self.direct[t] } else { 0.0 };
                self.edv[t] * unit + direct
            })
            .collect()
    }

    pub fn evaluate(&self, pattern: &FacadePattern) -> SdaResult {
        let da: Vec<f64> = (0..self.n_sensors)
            .map(|s| {
                let lit = self
                    .sensor_series(pattern, s)
                    .iter()
                    .filter(|&&e| e >= SDA_LUX_THRESHOLD)
                    .count();
                lit as f64 / self.n_steps as f64
            })
            .collect();
        let passing = da.iter().filter(|&&d| d >= SDA_DA_FRACTION).count();
        let sda_pct = 100.0 * passing as f64 / self.n_sensors as f64;
        SdaResult {
            da,
            sda_pct,
            label: label_of(sda_pct).expect("sDA is a percentage"),
        }
    }
}

/// Spatial daylight autonomy sDA(300 lx, 50 %) for one pattern.
pub fn compute_sda(room: &RoomModel, pattern: &FacadePattern, schedule: &SkySchedule) -> Result<SdaResult> {
    Ok(SdaEvaluator::new(room, schedule)?.evaluate(pattern))
}

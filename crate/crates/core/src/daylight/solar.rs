use std::io::Write;

use crate::error::{Error, Result};

pub const HOUSTON_LATITUDE: f64 = 29.76;
pub const DEFAULT_DNI_LUX: f64 = 80_000.0;
pub const DEFAULT_EDV_LUX: f64 = 10_000.0;

const MONTH_START: [u32; 12] = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334];

/// Day of year (non-leap) for `month` in 1..=12.
pub fn day_of_year(month: u32, day: u32) -> u32 {
    MONTH_START[(month - 1) as usize] + day
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SunPosition {
    pub altitude_deg: f64,
    /// Clockwise from north, in `[0, 360)`.
    pub azimuth_deg: f64,
}

impl SunPosition {
    /// Unit vector towards the sun in (east, north, up).
    pub fn direction(&self) -> [f64; 3] {
        let (a, z) = (self.altitude_deg.to_radians(), self.azimuth_deg.to_radians());
        [z.sin() * a.cos(), z.cos() * a.cos(), a.sin()]
    }
}

/// Declination/hour-angle solar position.
pub fn sun_position(latitude_deg: f64, day: u32, solar_hour: f64) -> Result<SunPosition> {
    if !(1..=365).contains(&day) || !(0.0..24.0).contains(&solar_hour) || !(-90.0..=90.0).contains(&latitude_deg) {
        return Err(Error::invalid(format!(
            "sun position needs day 1..=365, hour in [0,24), |lat| <= 90 (got {day}, {solar_hour}, {latitude_deg})"
        )));
    }
    let decl = (23.45 * (360.0 * (284.0 + day as f64) / 365.0).to_radians().sin()).to_radians();
    let h = (15.0 * (solar_hour - 12.0)).to_radians();
    let phi = latitude_deg.to_radians();
    let sin_alt = (phi.sin() * decl.sin() + phi.cos() * decl.cos() * h.cos()).clamp(-1.0, 1.0);
    let alt = sin_alt.asin();
    let denom = alt.cos() * phi.cos();
    let azimuth = if denom.abs() < 1e-12 {
        180.0
    } else {
        let c = ((decl.sin() - sin_alt * phi.sin()) / denom).clamp(-1.0, 1.0);
        let a = c.acos().to_degrees();
        if h > 0.0 {
            360.0 - a
        } else {
            a
        }
    };
    Ok(SunPosition {
        altitude_deg: alt.to_degrees(),
        azimuth_deg: azimuth.rem_euclid(360.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timestep {
    pub month: u32,
    pub hour: f64,
    pub sun: SunPosition,
    pub dni_lux: f64,
    pub edv_lux: f64,
}

/// Occupied-hour timesteps with their sky constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SkySchedule {
    pub latitude_deg: f64,
    pub steps: Vec<Timestep>,
}

impl SkySchedule {
    /// 15th of every month, whole solar hours `first..=last`.
    pub fn monthly(latitude_deg: f64, first: u32, last: u32, dni_lux: f64, edv_lux: f64) -> Result<Self> {
        if !(dni_lux > 0.0 && edv_lux > 0.0) {
            return Err(Error::invalid("sky illuminance constants must be > 0"));
        }
        let mut steps = Vec::new();
        for month in 1..=12 {
            let day = day_of_year(month, 15);
            for hour in first..=last {
                let hour = hour as f64;
                steps.push(Timestep {
                    month,
                    hour,
                    sun: sun_position(latitude_deg, day, hour)?,
                    dni_lux,
                    edv_lux,
                });
            }
        }
        Ok(Self { latitude_deg, steps })
    }

    /// 132 steps: 12 months x solar hours 8-18 at 29.76 N.
    pub fn standard() -> Self {
        Self::monthly(HOUSTON_LATITUDE, 8, 18, DEFAULT_DNI_LUX, DEFAULT_EDV_LUX).expect("valid constants")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// CSV with header `month,hour,altitude_deg,azimuth_deg,dni_lux,edv_lux`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["month", "hour", "altitude_deg", "azimuth_deg", "dni_lux", "edv_lux"])
            .map_err(crate::dataset::csv_err)?;
        for s in &self.steps {
            w.write_record([
                s.month.to_string(),
                format!("{}", s.hour),
                format!("{:.4}", s.sun.altitude_deg),
                format!("{:.4}", s.sun.azimuth_deg),
                format!("{}", s.dni_lux),
                format!("{}", s.edv_lux),
            ])
            .map_err(crate::dataset::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

//! Grayscale raster in `[0, 1]`, the sample representation shared by shapes and
//! facade patterns.

use crate::error::{Error, Result};

pub const DEFAULT_SIZE: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl ImageGrid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    /// Builds an image from row-major values, rejecting anything outside `[0, 1]`.
    pub fn from_values(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width} image",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    /// Like [`from_values`](Self::from_values) but clamps into `[0, 1]`; NaN maps to 0.
    pub fn from_values_clamped(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        let values = values
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self::from_values(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    /// Sets a pixel, clamping into `[0, 1]`.
    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        self.values[row * self.width + col] = value.clamp(0.0, 1.0);
    }

    pub fn same_size(&self, other: &ImageGrid) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Number of pixels with value `>= 0.5`.
    pub fn foreground_count(&self) -> usize {
        self.values.iter().filter(|&&v| v >= 0.5).count()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }

    /// Mean absolute per-pixel difference. Panics on size mismatch.
    pub fn mean_abs_distance(&self, other: &ImageGrid) -> f64 {
        assert!(self.same_size(other), "image size mismatch");
        let n = self.values.len().max(1) as f64;
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum::<f64>()
            / n
    }

    pub fn inverted(&self) -> ImageGrid {
        ImageGrid {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }

    /// Box-filter (area-average) resampling with fractional pixel overlaps.
    pub fn resample_area(&self, height: usize, width: usize) -> ImageGrid {
        let wy = area_weights(self.height, height);
        let wx = area_weights(self.width, width);
        let mut rows = vec![0.0f64; self.height * width];
        for r in 0..self.height {
            let src = &self.values[r * self.width..(r + 1) * self.width];
            for (c, taps) in wx.iter().enumerate() {
                rows[r * width + c] = taps.iter().map(|&(i, w)| src[i] as f64 * w).sum();
            }
        }
        let mut values = vec![0.0f32; height * width];
        for (r, taps) in wy.iter().enumerate() {
            for c in 0..width {
                let v: f64 = taps.iter().map(|&(i, w)| rows[i * width + c] * w).sum();
                values[r * width + c] = v.clamp(0.0, 1.0) as f32;
            }
        }
        ImageGrid {
            height,
            width,
            values,
        }
    }

    /// Bilinear resampling with pixel-center alignment and edge clamping.
    pub fn resample_bilinear(&self, height: usize, width: usize) -> ImageGrid {
        let sy = self.height as f64 / height as f64;
        let sx = self.width as f64 / width as f64;
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            let fy = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let ty = fy - y0 as f64;
            for c in 0..width {
                let fx = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let tx = fx - x0 as f64;
                let top = self.get(y0, x0) as f64 * (1.0 - tx) + self.get(y0, x1) as f64 * tx;
                let bot = self.get(y1, x0) as f64 * (1.0 - tx) + self.get(y1, x1) as f64 * tx;
                values.push((top * (1.0 - ty) + bot * ty).clamp(0.0, 1.0) as f32);
            }
        }
        ImageGrid {
            height,
            width,
            values,
        }
    }

    /// Tiles equally sized images into a `rows x cols` mosaic with a 1 px gutter
    /// of value 0.5. Missing tiles stay gray.
    pub fn mosaic(tiles: &[ImageGrid], cols: usize) -> Result<ImageGrid> {
        let first = tiles
            .first()
            .ok_or_else(|| Error::invalid("mosaic of zero tiles"))?;
        if tiles.iter().any(|t| !t.same_size(first)) || cols == 0 {
            return Err(Error::shape("mosaic tiles must share one size"));
        }
        let rows = tiles.len().div_ceil(cols);
        let (th, tw) = (first.height, first.width);
        let height = rows * (th + 1) + 1;
        let width = cols * (tw + 1) + 1;
        let mut out = ImageGrid {
            height,
            width,
            values: vec![0.5; height * width],
        };
        for (k, tile) in tiles.iter().enumerate() {
            let (tr, tc) = (k / cols, k % cols);
            for r in 0..th {
                for c in 0..tw {
                    out.values[(1 + tr * (th + 1) + r) * width + 1 + tc * (tw + 1) + c] =
                        tile.get(r, c);
                }
            }
        }
        Ok(out)
    }
}

// Per-destination-pixel list of (source index, weight) with weights summing to 1.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let lo = d as f64 * scale;
            let hi = (d + 1) as f64 * scale;
            let mut taps = Vec::new();
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < src {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((i, overlap / scale));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

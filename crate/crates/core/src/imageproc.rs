//! Binary post-processing for generated images: thresholding, morphology,
//! ratio-preserving cleanup and snapping facade rasters back to cells.
//!
//! Pixels outside the image are background. Erosion and dilation work on the
//! image directly; opening and closing are evaluated on a canvas padded by the
//! element's extent and then cropped, so they behave as set operations on the
//! plane (closing stays extensive at the border).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::daylight::{FacadePattern, COLS, ROWS};
use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub const DEFAULT_THRESHOLD: f32 = 0.5;
/// Allowed white-fraction drift, in percentage points.
pub const DEFAULT_TOLERANCE_PCT: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    height: usize,
    width: usize,
    values: Vec<bool>,
}

impl BinaryImage {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![false; height * width],
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(format!("{} values for {height}x{width}", values.len())));
        }
        Ok(Self { height, width, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.values[row * self.width + col]
    }

    // Out-of-range coordinates read as background.
    fn at(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.values[row as usize * self.width + col as usize]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.values[row * self.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn white_pct(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        100.0 * self.count() as f64 / self.values.len() as f64
    }

    pub fn complement(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| !v).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.values.iter().zip(&other.values).all(|(&a, &b)| !a || b)
    }

    /// `{0, 1}` raster.
    pub fn to_image(&self) -> ImageGrid {
        let v = self.values.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        ImageGrid::from_values(self.height, self.width, v).expect("binary values")
    }

    fn padded(&self, pad: usize) -> Self {
        let mut out = Self::new(self.height + 2 * pad, self.width + 2 * pad);
        for r in 0..self.height {
            for c in 0..self.width {
                out.set(r + pad, c + pad, self.get(r, c));
            }
        }
        out
    }

    fn cropped(&self, pad: usize, height: usize, width: usize) -> Self {
        let mut out = Self::new(height, width);
        for r in 0..height {
            for c in 0..width {
                out.set(r, c, self.get(r + pad, c + pad));
            }
        }
        out
    }
}

/// Boolean mask with an anchor; offsets are taken relative to the anchor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    height: usize,
    width: usize,
    mask: Vec<bool>,
    anchor: (usize, usize),
}

impl StructuringElement {
    pub fn new(height: usize, width: usize, mask: Vec<bool>, anchor: (usize, usize)) -> Result<Self> {
        if mask.len() != height * width || anchor.0 >= height || anchor.1 >= width || !mask.iter().any(|&m| m) {
            return Err(Error::invalid("structuring element needs a non-empty mask and an anchor inside it"));
        }
        Ok(Self {
            height,
            width,
            mask,
            anchor,
        })
    }

    /// 3 x 3 plus sign, centre anchor.
    pub fn cross() -> Self {
        Self::new(3, 3, vec![false, true, false, true, true, true, false, true, false], (1, 1)).unwrap()
    }

    /// Full 3 x 3 block, centre anchor.
    pub fn square() -> Self {
        Self::new(3, 3, vec![true; 9], (1, 1)).unwrap()
    }

    /// `(dr, dc)` of every set cell.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                if self.mask[r * self.width + c] {
                    out.push((r as isize - self.anchor.0 as isize, c as isize - self.anchor.1 as isize));
                }
            }
        }
        out
    }

    /// Point reflection through the anchor.
    pub fn reflected(&self) -> Self {
        let mut mask = self.mask.clone();
        mask.reverse();
        Self {
            height: self.height,
            width: self.width,
            mask,
            anchor: (self.height - 1 - self.anchor.0, self.width - 1 - self.anchor.1),
        }
    }

    fn reach(&self) -> usize {
        self.offsets()
            .iter()
            .map(|&(a, b)| a.unsigned_abs().max(b.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::cross()
    }
}

/// `true` iff the pixel is `>= threshold`.
pub fn binarize(img: &ImageGrid, threshold: f32) -> Result<BinaryImage> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} not in (0, 1)")));
    }
    Ok(BinaryImage {
        height: img.height(),
        width: img.width(),
        values: img.values().iter().map(|&v| v >= threshold).collect(),
    })
}

/// Pixels `p` with `p + b` set for every offset `b`.
pub fn erode(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let offs = se.offsets();
    let mut out = BinaryImage::new(img.height, img.width);
    for r in 0..img.height {
        for c in 0..img.width {
            let v = offs.iter().all(|&(dr, dc)| img.at(r as isize + dr, c as isize + dc));
            out.set(r, c, v);
        }
    }
    out
}

/// Pixels `p` with `p - b` set for some offset `b`.
pub fn dilate(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let offs = se.offsets();
    let mut out = BinaryImage::new(img.height, img.width);
    for r in 0..img.height {
        for c in 0..img.width {
            let v = offs.iter().any(|&(dr, dc)| img.at(r as isize - dr, c as isize - dc));
            out.set(r, c, v);
        }
    }
    out
}

pub fn open(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let pad = se.reach();
    let p = img.padded(pad);
    dilate(&erode(&p, se), se).cropped(pad, img.height, img.width)
}

pub fn close(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let pad = 2 * se.reach();
    let p = img.padded(pad);
    erode(&dilate(&p, se), se).cropped(pad, img.height, img.width)
}

const N4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

/// Opening then closing. If the white fraction then differs from the input's
/// by more than `tolerance_pct` points, pixels of the surplus class that touch
/// the other class are flipped one at a time, nearest to the pixels the
/// cleanup changed first (4-connected distance, then row, then column). When
/// the image has no such boundary (one class everywhere), any surplus pixel is
/// eligible under the same ordering.
pub fn ratio_preserving_clean(img: &BinaryImage, se: &StructuringElement, tolerance_pct: f64) -> Result<BinaryImage> {
    if !(tolerance_pct >= 0.0) {
        return Err(Error::invalid("tolerance must be >= 0"));
    }
    let mut out = close(&open(img, se), se);
    let n = img.values.len();
    if n == 0 {
        return Ok(out);
    }
    let target = img.count() as i64;
    let drift = |count: i64| 100.0 * (count - target).abs() as f64 / n as f64;
    let mut count = out.count() as i64;
    if drift(count) <= tolerance_pct {
        return Ok(out);
    }

    let (h, w) = (img.height, img.width);
    let dist = changed_distance(img, &out);
    // surplus class: white when the cleanup added white
    let surplus = count > target;
    let is_candidate = |im: &BinaryImage, r: usize, c: usize| {
        im.get(r, c) == surplus
            && N4
                .iter()
                .any(|&(dr, dc)| {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w && im.get(rr as usize, cc as usize) != surplus
                })
    };
    let mut heap = BinaryHeap::new();
    for r in 0..h {
        for c in 0..w {
            if is_candidate(&out, r, c) {
                heap.push(Reverse((dist[r * w + c], r, c)));
            }
        }
    }
    let mut fallback = false;
    while drift(count) > tolerance_pct {
        let Some(Reverse((_, r, c))) = heap.pop() else {
            if fallback {
                break;
            }
            fallback = true;
            for r in 0..h {
                for c in 0..w {
                    if out.get(r, c) == surplus {
                        heap.push(Reverse((dist[r * w + c], r, c)));
                    }
                }
            }
            continue;
        };
        let eligible = if fallback { out.get(r, c) == surplus } else { is_candidate(&out, r, c) };
        if !eligible {
            continue;
        }
        out.set(r, c, !surplus);
        count += if surplus { -1 } else { 1 };
        for (dr, dc) in N4 {
            let (rr, cc) = (r as isize + dr, c as isize + dc);
            if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                let (rr, cc) = (rr as usize, cc as usize);
                if is_candidate(&out, rr, cc) {
                    heap.push(Reverse((dist[rr * w + cc], rr, cc)));
                }
            }
        }
    }
    Ok(out)
}

// Multi-source BFS distance to the pixels where `a` and `b` differ.
fn changed_distance(a: &BinaryImage, b: &BinaryImage) -> Vec<u32> {
    let (h, w) = (a.height, a.width);
    let mut dist = vec![u32::MAX; h * w];
    let mut queue = VecDeque::new();
    for i in 0..h * w {
        if a.values[i] != b.values[i] {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (r, c) = ((i / w) as isize, (i % w) as isize);
        for (dr, dc) in N4 {
            let (rr, cc) = (r + dr, c + dc);
            if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                let j = rr as usize * w + cc as usize;
                if dist[j] == u32::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    dist
}

/// Window-to-wall ratio of a facade pattern, in percent.
pub fn wwr(pattern: &FacadePattern) -> f64 {
    pattern.wwr_pct()
}

/// Cell is open iff at least half of its pixel block is set.
pub fn snap_to_grid(img: &BinaryImage) -> Result<FacadePattern> {
    if img.height % ROWS != 0 || img.width % COLS != 0 || img.height == 0 {
        return Err(Error::shape(format!(
            "{}x{} image does not divide into {ROWS}x{COLS} cells",
            img.height, img.width
        )));
    }
    let (bh, bw) = (img.height / ROWS, img.width / COLS);
    let mut p = FacadePattern::closed();
    for r in 0..ROWS {
        for c in 0..COLS {
            let mut on = 0;
            for dy in 0..bh {
                for dx in 0..bw {
                    on += img.get(r * bh + dy, c * bw + dx) as usize;
                }
            }
            p.set(r, c, 2 * on >= bh * bw);
        }
    }
    Ok(p)
}

/// Generated facade raster to cell pattern: binarize at 0.5, clean with the
/// cross element at 2 points tolerance, snap.
pub fn postprocess_facade(img: &ImageGrid) -> Result<FacadePattern> {
    let b = binarize(img, DEFAULT_THRESHOLD)?;
    let clean = ratio_preserving_clean(&b, &StructuringElement::cross(), DEFAULT_TOLERANCE_PCT)?;
    snap_to_grid(&clean)
}

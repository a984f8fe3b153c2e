//! Per-class foreground statistics and the envelopes they stay inside at the
//! default jitter.
//!
//! `aspect` is foreground bounding-box width / height; `fill` is foreground
//! pixel count / bounding-box area. The boxes below are pairwise disjoint in at
//! least one of the two coordinates.
//!
//! | class     | aspect        | fill           |
//! |-----------|---------------|----------------|
//! | I         | [0.66, 0.90]  | [0.40, 0.66]   |
//! | L         | [0.38, 0.64]  | [0.40, 0.72]   |
//! | Rectangle | [1.60, 2.60]  | [0.745, 1.00]  |
//! | Square    | [0.82, 1.22]  | [0.78, 1.00]   |
//! | T         | [1.02, 1.45]  | [0.30, 0.51]   |
//! | Z         | [1.08, 1.59]  | [0.515, 0.74]  |

use super::ShapeClass;
use crate::image::ImageGrid;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeStats {
    pub area: usize,
    pub aspect: f64,
    pub fill: f64,
}

/// Statistics of the `>= 0.5` foreground; `None` for an empty image.
pub fn shape_stats(img: &ImageGrid) -> Option<ShapeStats> {
    let (mut r0, mut r1, mut c0, mut c1, mut n) = (usize::MAX, 0, usize::MAX, 0, 0usize);
    for r in 0..img.height() {
        for c in 0..img.width() {
            if img.get(r, c) >= 0.5 {
                n += 1;
                r0 = r0.min(r);
                r1 = r1.max(r);
                c0 = c0.min(c);
                c1 = c1.max(c);
            }
        }
    }
    if n == 0 {
        return None;
    }
    let w = (c1 - c0 + 1) as f64;
    let h = (r1 - r0 + 1) as f64;
    Some(ShapeStats {
        area: n,
        aspect: w / h,
        fill: n as f64 / (w * h),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub aspect: (f64, f64),
    pub fill: (f64, f64),
}

impl Envelope {
    pub fn contains(&self, s: &ShapeStats) -> bool {
        (self.aspect.0..=self.aspect.1).contains(&s.aspect) && (self.fill.0..=self.fill.1).contains(&s.fill)
    }

    pub fn disjoint(&self, other: &Envelope) -> bool {
        let apart = |a: (f64, f64), b: (f64, f64)| a.1 < b.0 || b.1 < a.0;
        apart(self.aspect, other.aspect) || apart(self.fill, other.fill)
    }
}

pub fn class_envelope(class: ShapeClass) -> Envelope {
    let (aspect, fill) = match class {
        ShapeClass::I => ((0.66, 0.90), (0.40, 0.66)),
        ShapeClass::L => ((0.38, 0.64), (0.40, 0.72)),
        ShapeClass::Rectangle => ((1.60, 2.60), (0.745, 1.00)),
        ShapeClass::Square => ((0.82, 1.22), (0.78, 1.00)),
        ShapeClass::T => ((1.02, 1.45), (0.30, 0.51)),
        ShapeClass::Z => ((1.08, 1.59), (0.515, 0.74)),
    };
    Envelope { aspect, fill }
}

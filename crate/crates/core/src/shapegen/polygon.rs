use crate::error::{Error, Result};

/// Closed polygon in pixel coordinates (x right, y down).
///
/// Winding is counter-clockwise as displayed, which with the y axis pointing
/// down means a negative shoelace sum over the raw coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!("polygon needs >= 3 vertices, got {}", vertices.len())));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite polygon vertex"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Raw shoelace sum / 2 (negative for display-counter-clockwise).
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a[0] * b[1] - b[0] * a[1]).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() < 0.0
    }

    pub fn into_ccw(mut self) -> Self {
        if self.signed_area() > 0.0 {
            self.vertices.reverse();
        }
        self
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), v| (a.min(v[0]), b.min(v[1]), c.max(v[0]), d.max(v[1])),
        )
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        let (x0, y0, x1, y1) = self.bbox();
        x0 >= 0.0 && y0 >= 0.0 && x1 <= width && y1 <= height
    }

    /// Maps every vertex through `f`.
    pub fn map(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when no two non-adjacent edges touch and no edge is degenerate.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if self.area() <= 1e-9 {
            return false;
        }
        let e: Vec<_> = self.edges().collect();
        if e.iter().any(|(a, b)| a == b) {
            return false;
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    if n > 3 && collinear_overlap(e[i], e[j]) {
                        return false;
                    }
                    continue;
                }
                if segments_intersect(e[i].0, e[i].1, e[j].0, e[j].1) {
                    return false;
                }
            }
        }
        true
    }

    /// Even-odd point test; the crossing formula is shared with the rasteriser.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if let Some(x) = crossing_x(a, b, py) {
                if px < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// x where edge `a-b` crosses the horizontal line `y = py` under the
/// half-open rule `(a.y > py) != (b.y > py)`.
pub(crate) fn crossing_x(a: [f64; 2], b: [f64; 2], py: f64) -> Option<f64> {
    if (a[1] > py) != (b[1] > py) {
        Some(a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1]))
    } else {
        None
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

// Adjacent edges folding back onto each other.
fn collinear_overlap(e1: ([f64; 2], [f64; 2]), e2: ([f64; 2], [f64; 2])) -> bool {
    let (a, b) = e1;
    let (c, d) = e2;
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    let dir1 = [b[0] - a[0], b[1] - a[1]];
    let dir2 = [d[0] - c[0], d[1] - c[1]];
    dir1[0] * dir2[0] + dir1[1] * dir2[1] < 0.0
}

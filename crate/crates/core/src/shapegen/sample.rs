use rand::Rng as _;
use std::f64::consts::PI;

use super::template::template_vertices;
use super::{JitterSpec, Polygon, ShapeClass, FRAME};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Re-sampling budget for jitter that yields a non-simple or out-of-frame polygon.
pub const MAX_ATTEMPTS: u32 = 100;

const WOBBLE_STREAM: u64 = 0x574f_4242;

/// Jittered polygon plus the draw that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledShape {
    pub polygon: Polygon,
    pub scale: f64,
    /// Index of the successful attempt (0 = first draw).
    pub attempt: u32,
    /// Positions of template corners within `polygon.vertices()`.
    pub corner_indices: Vec<usize>,
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn disc_offset(rng: &mut Rng, radius: f64) -> [f64; 2] {
    if radius == 0.0 {
        return [0.0, 0.0];
    }
    let r = radius * rng.random::<f64>().sqrt();
    let t = 2.0 * PI * rng.random::<f64>();
    [r * t.cos(), r * t.sin()]
}

fn draw(class: ShapeClass, jitter: &JitterSpec, rng: &mut Rng) -> (Polygon, f64, Vec<usize>) {
    let tpl = template_vertices(class);
    let n = tpl.len();
    let scale = uniform(rng, jitter.scale_range.0, jitter.scale_range.1);
    let c = FRAME / 2.0;
    let scaled = |p: [f64; 2]| [c + scale * (p[0] - c), c + scale * (p[1] - c)];
    let with_mids = jitter.edge_nudge > 0.0;
    let mut verts = Vec::with_capacity(if with_mids { 2 * n } else { n });
    let mut corners = Vec::with_capacity(n);
    for i in 0..n {
        let a = tpl[i];
        let b = tpl[(i + 1) % n];
        let d = disc_offset(rng, jitter.corner_radius);
        corners.push(verts.len());
        verts.push(scaled([a[0] + d[0], a[1] + d[1]]));
        if with_mids {
            let nudge = uniform(rng, -jitter.edge_nudge, jitter.edge_nudge);
            let mut m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            // templates are axis-aligned; the nudge axis is the edge normal
            if a[1] == b[1] {
                m[1] += nudge;
            } else {
                m[0] += nudge;
            }
            verts.push(scaled(m));
        }
    }
    let poly = Polygon::new(verts).expect("template vertices are finite");
    (poly, scale, corners)
}

/// Jittered instance of the class template with its draw metadata.
pub fn sample_shape(class: ShapeClass, jitter: &JitterSpec, seed: u64) -> Result<SampledShape> {
    jitter.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_from_seed(derive_seed(seed, attempt as u64));
        let (poly, scale, corners) = draw(class, jitter, &mut rng);
        if poly.is_simple() && poly.is_ccw() && poly.within(FRAME, FRAME) {
            return Ok(SampledShape {
                polygon: poly,
                scale,
                attempt,
                corner_indices: corners,
            });
        }
    }
    Err(Error::SamplingFailed {
        class: class.to_string(),
        attempts: MAX_ATTEMPTS,
    })
}

/// Jittered polygon for `class`; see [`sample_shape`].
pub fn sample_polygon(class: ShapeClass, jitter: JitterSpec, seed: u64) -> Result<Polygon> {
    sample_shape(class, &jitter, seed).map(|s| s.polygon)
}

/// Distribution of the hand-drawn-style test shapes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreehandSpec {
    pub jitter: JitterSpec,
    /// Peak normal displacement (px) of the edge wobble.
    pub wobble_amplitude: f64,
    /// Approximate spacing (px) of inserted wobble points.
    pub segment_length: f64,
}

impl Default for FreehandSpec {
    fn default() -> Self {
        Self {
            jitter: JitterSpec {
                corner_radius: 6.0,
                edge_nudge: 5.0,
                scale_range: (0.55, 1.0),
            },
            wobble_amplitude: 1.5,
            segment_length: 4.0,
        }
    }
}

fn wobble(base: &Polygon, spec: &FreehandSpec, rng: &mut Rng) -> Polygon {
    let mut out = Vec::new();
    for (a, b) in base.edges() {
        out.push(a);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        let segs = (len / spec.segment_length).ceil().max(1.0) as usize;
        let cycles = if rng.random::<bool>() { 1.0 } else { 2.0 };
        let mut amp = spec.wobble_amplitude * uniform(rng, 0.5, 1.0);
        if rng.random::<bool>() {
            amp = -amp;
        }
        let normal = [-dy / len, dx / len];
        for k in 1..segs {
            let t = k as f64 / segs as f64;
            let w = amp * (PI * cycles * t).sin();
            out.push([a[0] + t * dx + w * normal[0], a[1] + t * dy + w * normal[1]]);
        }
    }
    Polygon::new(out).expect("finite vertices")
}

/// Freehand-style polygon: heavier jitter followed by low-frequency sinusoidal
/// wobble along every edge. With zero wobble this equals
/// `sample_polygon(class, spec.jitter, seed)`.
pub fn freehand_polygon(class: ShapeClass, spec: &FreehandSpec, seed: u64) -> Result<Polygon> {
    if !(spec.wobble_amplitude >= 0.0 && spec.segment_length > 0.0) {
        return Err(Error::invalid("wobble amplitude must be >= 0 and segment length > 0"));
    }
    let base = sample_polygon(class, spec.jitter, seed)?;
    if spec.wobble_amplitude == 0.0 {
        return Ok(base);
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_from_seed(derive_seed(seed ^ WOBBLE_STREAM, attempt as u64));
        let p = wobble(&base, spec, &mut rng);
        if p.is_simple() && p.within(FRAME, FRAME) {
            return Ok(p.into_ccw());
        }
    }
    Err(Error::SamplingFailed {
        class: class.to_string(),
        attempts: MAX_ATTEMPTS,
    })
}

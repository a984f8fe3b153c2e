//! Canonical outlines in a 100x100 frame centred on (50, 50), y down.
//!
//! | class     | vertices | bbox (w x h) | area  |
//! |-----------|----------|--------------|-------|
//! | I         | 12       | 60 x 80      | 2880  |
//! | L         | 6        | 40 x 80      | 2000  |
//! | Rectangle | 4        | 80 x 40      | 3200  |
//! | Square    | 4        | 60 x 60      | 3600  |
//! | T         | 8        | 84 x 70      | 2680  |
//! | Z         | 8        | 66 x 50      | 2300  |
//!
//! The I outline is a flanged beam (two 60x16 flanges joined by a 20 px web),
//! which needs 12 vertices.

use super::{Polygon, ShapeClass};

/// Side length of the frame templates are defined in.
pub const FRAME: f64 = 100.0;

pub(crate) fn template_vertices(class: ShapeClass) -> &'static [[f64; 2]] {
    match class {
        ShapeClass::I => &[
            [20.0, 10.0],
            [20.0, 26.0],
            [40.0, 26.0],
            [40.0, 74.0],
            [20.0, 74.0],
            [20.0, 90.0],
            [80.0, 90.0],
            [80.0, 74.0],
            [60.0, 74.0],
            [60.0, 26.0],
            [80.0, 26.0],
            [80.0, 10.0],
        ],
        ShapeClass::L => &[
            [30.0, 10.0],
            [30.0, 90.0],
            [70.0, 90.0],
            [70.0, 70.0],
            [50.0, 70.0],
            [50.0, 10.0],
        ],
        ShapeClass::Rectangle => &[[10.0, 30.0], [10.0, 70.0], [90.0, 70.0], [90.0, 30.0]],
        ShapeClass::Square => &[[20.0, 20.0], [20.0, 80.0], [80.0, 80.0], [80.0, 20.0]],
        ShapeClass::T => &[
            [8.0, 15.0],
            [8.0, 35.0],
            [40.0, 35.0],
            [40.0, 85.0],
            [60.0, 85.0],
            [60.0, 35.0],
            [92.0, 35.0],
            [92.0, 15.0],
        ],
        ShapeClass::Z => &[
            [17.0, 25.0],
            [17.0, 50.0],
            [37.0, 50.0],
            [37.0, 75.0],
            [83.0, 75.0],
            [83.0, 50.0],
            [63.0, 50.0],
            [63.0, 25.0],
        ],
    }
}

/// Fixed outline for `class`, counter-clockwise as displayed.
pub fn canonical_template(class: ShapeClass) -> Polygon {
    Polygon::new(template_vertices(class).to_vec())
        .expect("templates have >= 3 finite vertices")
        .into_ccw()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_simple_and_ccw() {
        for c in ShapeClass::ALL {
            let p = canonical_template(c);
            assert!(p.is_simple(), "{c}");
            assert!(p.is_ccw(), "{c}");
            assert!(p.within(FRAME, FRAME));
            let (x0, y0, x1, y1) = p.bbox();
            assert_eq!((x0 + x1) / 2.0, 50.0, "{c}");
            assert_eq!((y0 + y1) / 2.0, 50.0, "{c}");
        }
    }

    #[test]
    fn documented_areas() {
        let want = [2880.0, 2000.0, 3200.0, 3600.0, 2680.0, 2300.0];
        for (c, a) in ShapeClass::ALL.into_iter().zip(want) {
            assert_eq!(canonical_template(c).area(), a, "{c}");
        }
    }
}

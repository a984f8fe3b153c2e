use super::polygon::crossing_x;
use super::Polygon;
use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Rasterised polygon; `degenerate` is set when the polygon had zero area and
/// the image was left empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Rasterized {
    pub image: ImageGrid,
    pub degenerate: bool,
}

/// Binary scanline fill of `poly` onto a `size` x `size` grid. A pixel is 1.0
/// when its centre is inside under the even-odd rule.
pub fn rasterize(poly: &Polygon, size: usize) -> Result<Rasterized> {
    let mut image = ImageGrid::zeros(size, size);
    if !poly.within(size as f64, size as f64) {
        return Err(Error::invalid(format!("polygon exceeds the {size}x{size} frame")));
    }
    if poly.area() <= 1e-12 {
        log::warn!("degenerate polygon rasterised as empty image");
        return Ok(Rasterized {
            image,
            degenerate: true,
        });
    }
    let mut xs = Vec::new();
    for row in 0..size {
        let py = row as f64 + 0.5;
        xs.clear();
        xs.extend(poly.edges().filter_map(|(a, b)| crossing_x(a, b, py)));
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        // centre is inside when an odd number of crossings lie strictly right of it
        let mut le = 0;
        for col in 0..size {
            let px = col as f64 + 0.5;
            while le < xs.len() && xs[le] <= px {
                le += 1;
            }
            if (xs.len() - le) % 2 == 1 {
                image.set(row, col, 1.0);
            }
        }
    }
    Ok(Rasterized {
        image,
        degenerate: false,
    })
}

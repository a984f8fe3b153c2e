use std::fmt;

use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub const COLS: usize = 18;
pub const ROWS: usize = 8;
pub const CELLS: usize = COLS * ROWS;
/// Raster resolution of one cell (images are 72 x 32).
pub const PX_PER_CELL: usize = 4;

/// 18 x 8 window/opaque grid, row-major with row 0 at the top.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FacadePattern {
    cells: [bool; CELLS],
}

impl FacadePattern {
    pub fn closed() -> Self {
        Self { cells: [false; CELLS] }
    }

    pub fn open() -> Self {
        Self { cells: [true; CELLS] }
    }

    pub fn from_cells(cells: [bool; CELLS]) -> Self {
        Self { cells }
    }

    /// Pattern with the listed flat indices open.
    pub fn from_open_indices(indices: &[usize]) -> Result<Self> {
        let mut p = Self::closed();
        for &i in indices {
            if i >= CELLS {
                return Err(Error::invalid(format!("cell index {i} >= {CELLS}")));
            }
            p.cells[i] = true;
        }
        Ok(p)
    }

    pub fn cells(&self) -> &[bool; CELLS] {
        &self.cells
    }

    pub fn is_open(&self, row: usize, col: usize) -> bool {
        self.cells[row * COLS + col]
    }

    pub fn set(&mut self, row: usize, col: usize, open: bool) {
        self.cells[row * COLS + col] = open;
    }

    pub fn open_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Window-to-wall ratio in percent.
    pub fn wwr_pct(&self) -> f64 {
        100.0 * self.open_count() as f64 / CELLS as f64
    }

    pub fn is_subset_of(&self, other: &FacadePattern) -> bool {
        self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// Eight lines of eighteen `0`/`1` characters, each ending in `\n`.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(ROWS * (COLS + 1));
        for r in 0..ROWS {
            for c in 0..COLS {
                s.push(if self.is_open(r, c) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        if lines.len() != ROWS {
            return Err(Error::format("facade pattern", format!("{} rows, want {ROWS}", lines.len())));
        }
        let mut p = Self::closed();
        for (r, line) in lines.iter().enumerate() {
            if line.len() != COLS {
                return Err(Error::format("facade pattern", format!("row {r} has {} chars", line.len())));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '1' => p.set(r, c, true),
                    '0' => {}
                    other => return Err(Error::format("facade pattern", format!("bad character {other:?}"))),
                }
            }
        }
        Ok(p)
    }

    /// 72 x 32 raster; open cells are 4 x 4 blocks of 1.0.
    pub fn to_image(&self) -> ImageGrid {
        let mut im = ImageGrid::zeros(ROWS * PX_PER_CELL, COLS * PX_PER_CELL);
        for r in 0..ROWS {
            for c in 0..COLS {
                if self.is_open(r, c) {
                    for dy in 0..PX_PER_CELL {
                        for dx in 0..PX_PER_CELL {
                            im.set(r * PX_PER_CELL + dy, c * PX_PER_CELL + dx, 1.0);
                        }
                    }
                }
            }
        }
        im
    }
}

impl fmt::Debug for FacadePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FacadePattern(\n{})", self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let p = FacadePattern::from_open_indices(&[0, 17, 18, 143]).unwrap();
        let t = p.to_text();
        assert_eq!(t.lines().count(), 8);
        assert!(t.starts_with("100000000000000001\n1000"));
        assert_eq!(FacadePattern::from_text(&t).unwrap(), p);
        assert!(FacadePattern::from_text("0101").is_err());
        assert!(FacadePattern::from_text(&t.replace('1', "x")).is_err());
    }

    #[test]
    fn wwr_and_image() {
        assert_eq!(FacadePattern::open().wwr_pct(), 100.0);
        let p = FacadePattern::from_open_indices(&[19]).unwrap();
        assert!((p.wwr_pct() - 0.694).abs() < 5e-4);
        let im = p.to_image();
        assert_eq!((im.height(), im.width()), (32, 72));
        assert_eq!(im.foreground_count(), 16);
        assert_eq!(im.get(4, 4), 1.0);
        assert_eq!(im.get(3, 4), 0.0);
    }
}

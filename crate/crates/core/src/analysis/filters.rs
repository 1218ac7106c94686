use std::io::Write as _;
use std::path::Path;

use crate::data::Image;
use crate::error::{Error, Result};
use crate::math::{Matrix, RandomSource};

pub const DEFAULT_LOW: f64 = -3.0;
pub const DEFAULT_HIGH: f64 = 3.0;

/// Thresholded encoder filters laid out on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGrid {
    pub cells: Vec<Image>,
    pub rows: usize,
    pub cols: usize,
    /// `(low, high)`.
    pub thresholds: (f64, f64),
    /// Hidden unit shown in each cell.
    pub units: Vec<usize>,
}

fn level(v: f64, low: f64, high: f64) -> f64 {
    if v >= high {
        1.0
    } else if v <= low {
        0.0
    } else {
        0.5
    }
}

impl FilterGrid {
    /// One image with the cells tiled row by row; unused cells are gray.
    pub fn render(&self) -> Image {
        let side = self.cells.first().map_or(1, Image::width);
        let (w, h) = (self.cols * side, self.rows * side);
        let mut px = vec![0.5; w * h];
        for (k, cell) in self.cells.iter().enumerate() {
            let (r, c) = (k / self.cols, k % self.cols);
            for y in 0..side {
                for x in 0..side {
                    px[(r * side + y) * w + c * side + x] = cell.get(x, y);
                }
            }
        }
        Image::new(w, h, px).expect("levels are in [0, 1]")
    }
}

/// Picks `count` distinct hidden units at random and renders each unit's
/// input weights (a column of `w`, `d_x × d_h`) as a square tile:
/// weights `>= high` white, `<= low` black, everything else gray.
pub fn export_filter_grid(
    w: &Matrix,
    count: usize,
    cols: usize,
    low: f64,
    high: f64,
    rng: &mut RandomSource,
) -> Result<FilterGrid> {
    let (d_x, d_h) = w.shape();
    if count == 0 || cols == 0 {
        return Err(Error::InvalidArgument("filter count and columns must be >= 1".into()));
    }
    if count > d_h {
        return Err(Error::InvalidArgument(format!(
            "{count} filters requested from {d_h} hidden units"
        )));
    }
    if !(low < high) {
        return Err(Error::InvalidArgument("low threshold must be below high".into()));
    }
    let side = crate::data::square_side(d_x)
        .map_err(|_| Error::InvalidArgument(format!("filter length {d_x} is not a square")))?;
    let mut units = rng.permutation(d_h);
    units.truncate(count);
    let cells = units
        .iter()
        .map(|&j| {
            let px = (0..d_x).map(|i| level(w[(i, j)], low, high)).collect();
            Image::new(side, side, px)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterGrid {
        cells,
        rows: count.div_ceil(cols),
        cols,
        thresholds: (low, high),
        units,
    })
}

/// Binary 8-bit PGM (P5).
pub fn write_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(img.pixels().len() + 20);
    let _ = write!(out, "P5\n{} {}\n255\n", img.width(), img.height());
    out.extend(img.pixels().iter().map(|p| (p * 255.0).round() as u8));
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

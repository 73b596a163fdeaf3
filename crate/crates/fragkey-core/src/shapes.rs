//! Catalog of regular binary patterns.
//!
//! Each shape is a pure function of `(shape, width, height, ratio)`: cells are
//! ranked by a shape-specific distance from the grid center and the requested
//! number of bright cells is taken in rank order (ties broken row-major).
//! When the bright count lands on a whole ring of the shape's distance
//! function, the result is symmetric under horizontal and vertical flips;
//! the defaults are chosen that way.

use crate::error::{FragkeyError, Result};
use crate::pattern::BinaryPattern;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Shape catalog for `make_regular_pattern`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Filled diamond: cells ranked by L1 distance from center.
    Rhombus,
    /// Centered block: cells ranked by Chebyshev distance from center.
    Rectangle,
    /// Central rows and columns: cells ranked by min(|dx|, |dy|).
    Cross,
    /// Checkerboard: even-parity cells first, center outward within a parity.
    Checker,
}

impl FromStr for Shape {
    type Err = FragkeyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rhombus" => Ok(Shape::Rhombus),
            "rectangle" => Ok(Shape::Rectangle),
            "cross" => Ok(Shape::Cross),
            "checker" => Ok(Shape::Checker),
            other => Err(FragkeyError::Config(format!("unknown shape {other:?}"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Shape::Rhombus => "rhombus",
            Shape::Rectangle => "rectangle",
            Shape::Cross => "cross",
            Shape::Checker => "checker",
        };
        write!(f, "{name}")
    }
}

/// A dark:bright cell ratio, e.g. `13:3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub dark: u32,
    pub bright: u32,
}

impl Ratio {
    pub fn new(dark: u32, bright: u32) -> Result<Self> {
        if dark == 0 && bright == 0 {
            return Err(FragkeyError::Config("ratio 0:0 is meaningless".into()));
        }
        Ok(Self { dark, bright })
    }

    /// Bright-cell count for a `width x height` grid: the nearest integer to
    /// `cells * bright / (dark + bright)`. Non-integral ratios (such as 31:2
    /// on 64 cells) round to nearest, half away from zero.
    pub fn bright_cells(&self, width: usize, height: usize) -> usize {
        let cells = (width * height) as f64;
        let frac = self.bright as f64 / (self.dark + self.bright) as f64;
        (cells * frac).round() as usize
    }
}

impl FromStr for Ratio {
    type Err = FragkeyError;
    fn from_str(s: &str) -> Result<Self> {
        let (d, b) = s
            .split_once(':')
            .ok_or_else(|| FragkeyError::Config(format!("ratio must look like 13:3, got {s:?}")))?;
        let parse = |tok: &str| {
            tok.trim()
                .parse::<u32>()
                .map_err(|e| FragkeyError::Config(format!("bad ratio component {tok:?}: {e}")))
        };
        Ratio::new(parse(d)?, parse(b)?)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.dark, self.bright)
    }
}

/// Rank key for one cell: shape distance, then parity/ring refinements.
/// Lower sorts brighter.
fn cell_rank(shape: Shape, width: usize, height: usize, row: usize, col: usize) -> (f64, f64) {
    let dx = (col as f64) - (width as f64 - 1.0) / 2.0;
    let dy = (row as f64) - (height as f64 - 1.0) / 2.0;
    let (adx, ady) = (dx.abs(), dy.abs());
    match shape {
        Shape::Rhombus => (adx + ady, 0.0),
        Shape::Rectangle => (adx.max(ady), adx + ady),
        Shape::Cross => (adx.min(ady), adx + ady),
        Shape::Checker => (((row + col) % 2) as f64, adx + ady),
    }
}

/// Default bright count per shape (used when no ratio is given).
fn default_bright(shape: Shape, width: usize, height: usize) -> usize {
    match shape {
        // filled diamond reaching the grid edges, corners clipped
        Shape::Rhombus => {
            let smax = (width.min(height) / 2 + 1) as f64;
            let mut count = 0;
            for r in 0..height {
                for c in 0..width {
                    if cell_rank(shape, width, height, r, c).0 <= smax {
                        count += 1;
                    }
                }
            }
            count
        }
        // centered block of half the side lengths
        Shape::Rectangle => (width / 2).max(1) * (height / 2).max(1),
        // the two central rows plus the two central columns
        Shape::Cross => {
            let mut count = 0;
            for r in 0..height {
                for c in 0..width {
                    if cell_rank(shape, width, height, r, c).0 < 1.0 {
                        count += 1;
                    }
                }
            }
            count
        }
        // one full parity class
        Shape::Checker => (width * height).div_ceil(2),
    }
}

/// Generates a regular binary pattern. Pure function: no randomness.
///
/// `ratio: None` selects the shape's default size. `min_bright` floors the
/// bright count (callers pass the user count so every user can receive a
/// cell); the realized count is `max(min_bright, rounded ratio count)` and is
/// recorded in session transcripts.
pub fn make_regular_pattern(
    shape: Shape,
    width: usize,
    height: usize,
    ratio: Option<Ratio>,
    min_bright: usize,
) -> Result<BinaryPattern> {
    if width < 2 || height < 2 {
        return Err(FragkeyError::Config(format!(
            "pattern grid must be at least 2x2, got {width}x{height}"
        )));
    }
    let requested = match ratio {
        Some(r) => r.bright_cells(width, height),
        None => default_bright(shape, width, height),
    };
    if requested == 0 {
        return Err(FragkeyError::Config(format!(
            "ratio {} yields zero bright cells on {width}x{height}",
            ratio.map(|r| r.to_string()).unwrap_or_default()
        )));
    }
    let bright = requested.max(min_bright);
    if bright > width * height {
        return Err(FragkeyError::Config(format!(
            "bright count {bright} exceeds {width}x{height} = {} cells",
            width * height
        )));
    }

    let mut order: Vec<usize> = (0..width * height).collect();
    let keys: Vec<(f64, f64)> = order
        .iter()
        .map(|&i| cell_rank(shape, width, height, i / width, i % width))
        .collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .partial_cmp(&keys[b])
            .expect("finite rank keys")
            .then(a.cmp(&b))
    });

    let mut cells = vec![0u8; width * height];
    for &i in order.iter().take(bright) {
        cells[i] = 1;
    }
    BinaryPattern::new(width, height, cells)
}

//! Binary and integer cell grids, with plain PBM (P1) serialization.
//!
//! Convention used throughout the crate: cell value 1 = bright, 0 = dark.
//! Grids are stored row-major; `(row, col)` indexes as `row * width + col`.

use crate::error::{FragkeyError, Result};
use serde::{Deserialize, Serialize};

/// A `width x height` grid of {0,1} cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryPattern {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl BinaryPattern {
    /// Builds a pattern from raw cells (row-major, values must be 0 or 1).
    pub fn new(width: usize, height: usize, cells: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FragkeyError::Config(format!(
                "pattern dimensions must be positive, got {width}x{height}"
            )));
        }
        if cells.len() != width * height {
            return Err(FragkeyError::Config(format!(
                "cell count {} does not match {width}x{height}",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 1) {
            return Err(FragkeyError::Config(format!(
                "binary pattern cell out of range: {bad}"
            )));
        }
        Ok(Self { width, height, cells })
    }

    /// All-dark pattern.
    pub fn dark(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![0; width * height] }
    }

    /// Builds a pattern by evaluating `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                cells.push(f(r, c) as u8);
            }
        }
        Self { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.width + col]
    }

    /// Number of bright cells.
    pub fn bright_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    /// Flat indices of bright cells, in row-major order.
    pub fn bright_indices(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == 1).then_some(i))
            .collect()
    }

    /// True when every bright cell of `self` is bright in `other`.
    pub fn is_subset_of(&self, other: &BinaryPattern) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(&a, &b)| a == 0 || b == 1)
    }

    /// Mirror image across the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |r, c| {
            self.get(r, self.width - 1 - c) == 1
        })
    }

    /// Mirror image across the horizontal axis.
    pub fn flip_vertical(&self) -> Self {
        Self::from_fn(self.width, self.height, |r, c| {
            self.get(self.height - 1 - r, c) == 1
        })
    }

    /// Serializes to plain PBM (P1): `P1\n{width} {height}\n` then one line of
    /// space-separated cells per row.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for r in 0..self.height {
            let row: Vec<&str> = (0..self.width)
                .map(|c| if self.get(r, c) == 1 { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses plain PBM (P1). Comments (`#` to end of line) are stripped;
    /// cell values may be separated by any whitespace.
    pub fn from_pbm(text: &str) -> Result<Self> {
        let cleaned: String = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        let mut tokens = cleaned.split_whitespace();
        match tokens.next() {
            Some("P1") => {}
            other => {
                return Err(FragkeyError::Format(format!(
                    "expected PBM magic 'P1', got {other:?}"
                )))
            }
        }
        let parse_dim = |tok: Option<&str>, name: &str| -> Result<usize> {
            tok.ok_or_else(|| FragkeyError::Format(format!("missing PBM {name}")))?
                .parse::<usize>()
                .map_err(|e| FragkeyError::Format(format!("bad PBM {name}: {e}")))
        };
        let width = parse_dim(tokens.next(), "width")?;
        let height = parse_dim(tokens.next(), "height")?;
        let mut cells = Vec::with_capacity(width * height);
        for tok in tokens {
            match tok {
                "0" => cells.push(0),
                "1" => cells.push(1),
                other => {
                    return Err(FragkeyError::Format(format!(
                        "bad PBM cell token {other:?}"
                    )))
                }
            }
        }
        if cells.len() != width * height {
            return Err(FragkeyError::Format(format!(
                "PBM claims {width}x{height} = {} cells but contains {}",
                width * height,
                cells.len()
            )));
        }
        Self::new(width, height, cells)
    }
}

/// A grid of non-negative integers; the overlay of several binary patterns
/// before the binarity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntPattern {
    width: usize,
    height: usize,
    cells: Vec<u32>,
}

impl IntPattern {
    pub fn new(width: usize, height: usize, cells: Vec<u32>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(FragkeyError::Config(format!(
                "cell count {} does not match {width}x{height}",
                cells.len()
            )));
        }
        Ok(Self { width, height, cells })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.width + col]
    }

    /// Adds a binary pattern cellwise. Dimensions must match.
    pub fn add_pattern(&mut self, pat: &BinaryPattern) -> Result<()> {
        if pat.width() != self.width || pat.height() != self.height {
            return Err(FragkeyError::Protocol(format!(
                "cannot overlay {}x{} pattern onto {}x{} sum",
                pat.width(),
                pat.height(),
                self.width,
                self.height
            )));
        }
        for (acc, &c) in self.cells.iter_mut().zip(pat.cells()) {
            *acc += c as u32;
        }
        Ok(())
    }

    /// True when every cell is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.cells.iter().all(|&c| c <= 1)
    }

    /// Converts to a `BinaryPattern` when binary.
    pub fn to_binary(&self) -> Option<BinaryPattern> {
        self.is_binary().then(|| {
            BinaryPattern::new(
                self.width,
                self.height,
                self.cells.iter().map(|&c| c as u8).collect(),
            )
            .expect("binary cells")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_all_zero_2x2_exact_bytes() {
        let pat = BinaryPattern::dark(2, 2);
        assert_eq!(pat.to_pbm(), "P1\n2 2\n0 0\n0 0\n");
    }

    #[test]
    fn pbm_round_trip() {
        let pat = BinaryPattern::from_fn(8, 8, |r, c| (r * 3 + c * 5) % 7 < 3);
        let back = BinaryPattern::from_pbm(&pat.to_pbm()).unwrap();
        assert_eq!(pat, back);
    }

    #[test]
    fn pbm_errors() {
        assert!(matches!(
            BinaryPattern::from_pbm("P4\n2 2\n0 0 0 0"),
            Err(FragkeyError::Format(_))
        ));
        // claims 3x3 but contains 8 cells
        assert!(matches!(
            BinaryPattern::from_pbm("P1\n3 3\n0 0 0 0 0 0 0 0"),
            Err(FragkeyError::Format(_))
        ));
        assert!(matches!(
            BinaryPattern::from_pbm("P1\n2 2\n0 0 2 0"),
            Err(FragkeyError::Format(_))
        ));
    }

    #[test]
    fn pbm_comments_ignored() {
        let pat = BinaryPattern::from_pbm("P1\n# note\n2 1\n1 0\n").unwrap();
        assert_eq!(pat.cells(), &[1, 0]);
    }

    #[test]
    fn subset_and_counts() {
        let small = BinaryPattern::new(2, 2, vec![1, 0, 0, 0]).unwrap();
        let big = BinaryPattern::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
        assert_eq!(big.bright_count(), 2);
        assert_eq!(big.bright_indices(), vec![0, 1]);
    }

    #[test]
    fn cell_validation() {
        assert!(BinaryPattern::new(2, 2, vec![0, 1, 2, 0]).is_err());
        assert!(BinaryPattern::new(2, 2, vec![0, 1]).is_err());
        assert!(BinaryPattern::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn int_pattern_overlay_and_binarity() {
        let a = BinaryPattern::new(2, 1, vec![1, 0]).unwrap();
        let b = BinaryPattern::new(2, 1, vec![1, 1]).unwrap();
        let mut sum = IntPattern::zeros(2, 1);
        sum.add_pattern(&a).unwrap();
        assert!(sum.is_binary());
        sum.add_pattern(&b).unwrap();
        assert!(!sum.is_binary());
        assert_eq!(sum.cells(), &[2, 1]);
        assert!(sum.to_binary().is_none());
    }

    #[test]
    fn flips() {
        let pat = BinaryPattern::new(3, 1, vec![1, 0, 0]).unwrap();
        assert_eq!(pat.flip_horizontal().cells(), &[0, 0, 1]);
        let tall = BinaryPattern::new(1, 3, vec![1, 0, 0]).unwrap();
        assert_eq!(tall.flip_vertical().cells(), &[0, 0, 1]);
    }
}

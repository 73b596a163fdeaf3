//! Real-valued grids (correlation reconstructions, block means, source
//! profiles), with CSV as the authoritative format and PGM for eyeballing.

use crate::error::{FragkeyError, Result};
use serde::{Deserialize, Serialize};

/// A `width x height` grid of finite reals, row-major. Correlation values
/// fluctuate around zero, so cells may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    cells: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, cells: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FragkeyError::Config(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if cells.len() != width * height {
            return Err(FragkeyError::Config(format!(
                "cell count {} does not match {width}x{height}",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|c| !c.is_finite()) {
            return Err(FragkeyError::Config(format!(
                "image cell not finite: {bad}"
            )));
        }
        Ok(Self { width, height, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.width + col]
    }

    /// CSV export: one row per line, comma-separated, shortest round-trip
    /// decimal text.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.height {
            let row: Vec<String> =
                (0..self.width).map(|c| format!("{}", self.get(r, c))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|e| {
                        FragkeyError::Format(format!(
                            "bad value {tok:?} on line {}: {e}",
                            lineno + 1
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(FragkeyError::Format(format!(
                        "ragged CSV: line {} has {} values, expected {w}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            cells.extend(row);
            height += 1;
        }
        let width = width.ok_or_else(|| FragkeyError::Format("empty CSV image".into()))?;
        Self::new(width, height, cells)
    }

    /// PGM (P2) export, affinely rescaled to 0..=255 for visual inspection
    /// only; a constant image renders as all zeros.
    pub fn to_pgm(&self) -> String {
        let lo = self.cells.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for r in 0..self.height {
            let row: Vec<String> = (0..self.width)
                .map(|c| format!("{}", ((self.get(r, c) - lo) * scale).round() as u8))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

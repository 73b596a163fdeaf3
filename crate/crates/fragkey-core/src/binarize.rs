//! Turning reconstructed gray images back into binary patterns.
//!
//! Both methods first average each `nu x nu` pixel block down to one value
//! per pattern cell, then decide which cells are bright:
//!
//! * **smoothing** — no prior knowledge: split the block means into two
//!   clusters (1-D 2-means, deterministically seeded at the min and max) and
//!   threshold at the midpoint of the final cluster means;
//! * **sorting** — the receiver knows their fragment's bright-cell count
//!   `M` in advance: take the `M` largest block means, ties going to the
//!   lower row-major index.
//!
//! Both depend only on the ordering and relative gaps of block means, so any
//! positive affine rescaling of the input image leaves the output unchanged.

use crate::error::{FragkeyError, Result};
use crate::gi::block_means;
use crate::image::GrayImage;
use crate::pattern::BinaryPattern;
use serde::{Deserialize, Serialize};

/// Binarization rule applied to a reconstructed image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum BinarizeMethod {
    /// Parameter-free cluster thresholding.
    Smoothing,
    /// Known-count selection of the brightest cells.
    Sorting { bright_count: usize },
}

/// Dispatches to the selected binarization rule.
pub fn binarize(img: &GrayImage, nu: usize, method: &BinarizeMethod) -> Result<BinaryPattern> {
    match method {
        BinarizeMethod::Smoothing => binarize_smooth(img, nu),
        BinarizeMethod::Sorting { bright_count } => binarize_sort(img, nu, *bright_count),
    }
}

/// Cluster-threshold binarization for receivers with no prior knowledge.
///
/// Runs 1-D 2-means on the block means with centers seeded at the minimum
/// and maximum value (equidistant points join the lower cluster), iterates
/// to an exact fixed point, and lights every cell strictly above the
/// midpoint of the two final cluster means. A degenerate image whose block
/// means are all equal carries no contrast to threshold and is rejected.
pub fn binarize_smooth(img: &GrayImage, nu: usize) -> Result<BinaryPattern> {
    let means = block_means(img, nu)?;
    let values = means.cells();
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(FragkeyError::InsufficientContrast(format!(
            "all {} block means equal {lo}",
            values.len()
        )));
    }

    for _ in 0..200 {
        let (mut lo_sum, mut lo_n, mut hi_sum, mut hi_n) = (0.0f64, 0usize, 0.0f64, 0usize);
        for &v in values {
            if (v - lo).abs() <= (v - hi).abs() {
                lo_sum += v;
                lo_n += 1;
            } else {
                hi_sum += v;
                hi_n += 1;
            }
        }
        if lo_n == 0 || hi_n == 0 {
            break; // cannot happen while lo < hi; guard against surprises
        }
        let (new_lo, new_hi) = (lo_sum / lo_n as f64, hi_sum / hi_n as f64);
        if new_lo == lo && new_hi == hi {
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }

    let threshold = (lo + hi) / 2.0;
    let cells = values.iter().map(|&v| (v > threshold) as u8).collect();
    BinaryPattern::new(means.width(), means.height(), cells)
}

/// Known-count binarization: exactly `bright_count` cells come out bright,
/// those with the largest block means (row-major index breaks ties).
pub fn binarize_sort(img: &GrayImage, nu: usize, bright_count: usize) -> Result<BinaryPattern> {
    let means = block_means(img, nu)?;
    let cells_total = means.width() * means.height();
    if bright_count > cells_total {
        return Err(FragkeyError::Config(format!(
            "bright count {bright_count} exceeds the {cells_total}-cell grid"
        )));
    }
    let mut order: Vec<usize> = (0..cells_total).collect();
    order.sort_by(|&a, &b| {
        means.cells()[b]
            .partial_cmp(&means.cells()[a])
            .expect("block means are finite")
            .then(a.cmp(&b))
    });
    let mut cells = vec![0u8; cells_total];
    for &i in order.iter().take(bright_count) {
        cells[i] = 1;
    }
    BinaryPattern::new(means.width(), means.height(), cells)
}

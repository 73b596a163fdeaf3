//! Ghost-imaging forward model and second-order correlation reconstruction.
//!
//! The simulated measurement projects each speckle pattern through a binary
//! object onto a single bucket detector:
//!
//! ```text
//! S_i = Σ_x  source(x) · I_i(x) · T(x)   (+ optional clamped Gaussian noise)
//! ```
//!
//! and the object estimate is the sample covariance of bucket value and
//! pixel intensity,
//!
//! ```text
//! ΔG²(x) = (1/N) Σ_i S_i·I_i(x)  −  ((1/N) Σ_i S_i) · ((1/N) Σ_i I_i(x)).
//! ```
//!
//! Summation order is part of this module's contract, because downstream
//! golden transcripts depend on bit-exact floating-point results:
//! scalar reductions use Neumaier-compensated summation, and the per-pixel
//! `Σ S_i·I_i(x)` accumulators batch measurements into runs of 256 that are
//! summed sequentially, then combine the runs along a fixed binary tree
//! (split at the midpoint, extra leaf to the left). With the default flat
//! source and zero noise every bucket is a small integer, so those paths are
//! exact regardless of grouping; the tree keeps noisy and profiled runs
//! reproducible too.

use crate::buckets::BucketSequence;
use crate::error::{FragkeyError, Result};
use crate::image::GrayImage;
use crate::pattern::BinaryPattern;
use crate::rng::gaussian;
use crate::speckles::SpeckleSet;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Measurements per run in the pairwise bucket·pixel accumulation.
const PAIRWISE_LEAF: usize = 256;

/// Neumaier-compensated sum: exact-ish scalar reduction that is insensitive
/// to magnitude ordering. Used for every scalar total in this crate.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Illumination profile of the source, evaluated lazily at detector
/// resolution. `Flat` is the default and keeps noiseless buckets integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceProfile {
    /// Uniform unit intensity.
    Flat,
    /// Radially peaked field `1 + strength·(1 − d/d_max)²`, normalized to
    /// mean 1, where `d` is the Euclidean distance from the image center.
    Center { strength: f64 },
    /// Arbitrary positive field loaded from a CSV grid at detector
    /// resolution.
    File { path: String },
}

impl Default for SourceProfile {
    fn default() -> Self {
        SourceProfile::Flat
    }
}

impl FromStr for SourceProfile {
    type Err = FragkeyError;

    /// Accepts `flat`, `center:<strength>`, or a CSV file path.
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("flat") {
            return Ok(SourceProfile::Flat);
        }
        if let Some(strength) = s.strip_prefix("center:") {
            let strength: f64 = strength.parse().map_err(|e| {
                FragkeyError::Config(format!("bad center-profile strength {strength:?}: {e}"))
            })?;
            return Ok(SourceProfile::Center { strength });
        }
        Ok(SourceProfile::File { path: s.to_string() })
    }
}

impl SourceProfile {
    /// Materializes the profile at `width x height`, or `None` for a flat
    /// field (which the measurement path special-cases to stay integral).
    pub fn resolve(&self, width: usize, height: usize) -> Result<Option<GrayImage>> {
        match self {
            SourceProfile::Flat => Ok(None),
            SourceProfile::Center { strength } => {
                Ok(Some(center_profile(width, height, *strength)?))
            }
            SourceProfile::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let img = GrayImage::from_csv(&text)?;
                if img.width() != width || img.height() != height {
                    return Err(FragkeyError::Config(format!(
                        "source profile {path:?} is {}x{}, detector is {width}x{height}",
                        img.width(),
                        img.height()
                    )));
                }
                validate_profile(&img)?;
                Ok(Some(img))
            }
        }
    }
}

fn validate_profile(img: &GrayImage) -> Result<()> {
    if img.cells().iter().any(|&v| v <= 0.0) {
        return Err(FragkeyError::Config(
            "source profile must be positive everywhere".into(),
        ));
    }
    Ok(())
}

/// Radially peaked source field, brightest at the image center, normalized
/// so the mean intensity over the detector is exactly the flat field's.
pub fn center_profile(width: usize, height: usize, strength: f64) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(FragkeyError::Config("profile needs positive dimensions".into()));
    }
    if !strength.is_finite() || strength < 0.0 {
        return Err(FragkeyError::Config(format!(
            "center-profile strength must be finite and non-negative, got {strength}"
        )));
    }
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let d_max = (cx * cx + cy * cy).sqrt();
    let mut cells = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let d = ((c as f64 - cx).powi(2) + (r as f64 - cy).powi(2)).sqrt();
            let rel = if d_max > 0.0 { 1.0 - d / d_max } else { 1.0 };
            cells.push(1.0 + strength * rel * rel);
        }
    }
    let total = neumaier_sum(cells.iter().copied());
    let scale = (width * height) as f64 / total;
    for v in &mut cells {
        *v *= scale;
    }
    GrayImage::new(width, height, cells)
}

/// Parameters of one measurement campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementConfig {
    /// Number of speckle measurements. Ensemble averages need at least 2.
    pub n: usize,
    /// Upsampling factor: each pattern cell spans `nu x nu` detector pixels.
    pub nu: usize,
    /// Detector noise as a fraction of the mean bucket value (0 disables).
    pub noise_sigma: f64,
    /// Detector noise floor in absolute bucket units, added to the relative
    /// term (0 disables). Models readout noise that does not scale with
    /// signal strength.
    pub noise_floor: f64,
    /// Source intensity at detector resolution; `None` means flat unit field.
    pub profile: Option<GrayImage>,
}

impl MeasurementConfig {
    pub fn new(n: usize, nu: usize) -> Result<Self> {
        if n < 2 {
            return Err(FragkeyError::Config(format!(
                "at least 2 measurements are required for ensemble averaging, got {n}"
            )));
        }
        if nu == 0 {
            return Err(FragkeyError::Config("upsample factor must be at least 1".into()));
        }
        Ok(Self {
            n,
            nu,
            noise_sigma: 0.0,
            noise_floor: 0.0,
            profile: None,
        })
    }

    /// Sets the relative noise level (fraction of mean bucket value).
    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(FragkeyError::Config(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )));
        }
        self.noise_sigma = sigma;
        Ok(self)
    }

    /// Sets the absolute noise floor (bucket units).
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !floor.is_finite() || floor < 0.0 {
            return Err(FragkeyError::Config(format!(
                "noise floor must be finite and non-negative, got {floor}"
            )));
        }
        self.noise_floor = floor;
        Ok(self)
    }

    /// Installs a non-flat source profile (must be positive everywhere).
    pub fn with_profile(mut self, profile: GrayImage) -> Result<Self> {
        validate_profile(&profile)?;
        self.profile = Some(profile);
        Ok(self)
    }
}

/// Replicates each cell of `pat` into a `nu x nu` block of detector pixels.
pub fn upsample(pat: &BinaryPattern, nu: usize) -> Result<BinaryPattern> {
    if nu == 0 {
        return Err(FragkeyError::Config("upsample factor must be at least 1".into()));
    }
    if nu == 1 {
        return Ok(pat.clone());
    }
    let (w, h) = (pat.width() * nu, pat.height() * nu);
    let mut cells = vec![0u8; w * h];
    for r in 0..h {
        for c in 0..w {
            cells[r * w + c] = pat.get(r / nu, c / nu);
        }
    }
    BinaryPattern::new(w, h, cells)
}

/// Packs a binary object into `u64` words aligned with [`SpeckleSet`]'s
/// layout, so the bucket integral reduces to AND + popcount.
fn pack_object(object: &BinaryPattern, words_per: usize) -> Vec<u64> {
    let mut words = vec![0u64; words_per];
    for (idx, &v) in object.cells().iter().enumerate() {
        if v == 1 {
            words[idx / 64] |= 1u64 << (idx % 64);
        }
    }
    words
}

/// Runs the bucket detector over every speckle pattern.
///
/// `object` must already be at detector resolution (see [`upsample`]) and
/// match the speckle dimensions; the speckle count must equal `cfg.n`. With a
/// flat source and zero noise each bucket is the integer overlap count, exact
/// in `f64`. Noise draws come from `rng` in measurement order, so a caller
/// that fixes the generator gets a reproducible sequence.
pub fn measure(
    object: &BinaryPattern,
    speckles: &SpeckleSet,
    cfg: &MeasurementConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BucketSequence> {
    if object.width() != speckles.width() || object.height() != speckles.height() {
        return Err(FragkeyError::Config(format!(
            "object is {}x{}, speckles are {}x{}",
            object.width(),
            object.height(),
            speckles.width(),
            speckles.height()
        )));
    }
    if speckles.count() != cfg.n {
        return Err(FragkeyError::Config(format!(
            "config expects {} measurements, speckle set holds {}",
            cfg.n,
            speckles.count()
        )));
    }
    if let Some(profile) = &cfg.profile {
        if profile.width() != object.width() || profile.height() != object.height() {
            return Err(FragkeyError::Config(format!(
                "source profile is {}x{}, detector is {}x{}",
                profile.width(),
                profile.height(),
                object.width(),
                object.height()
            )));
        }
        validate_profile(profile)?;
    }

    let obj_words = pack_object(object, speckles.words_per_pattern());
    let mut values = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let pat = speckles.pattern_words(i);
        let v = match &cfg.profile {
            None => {
                let mut count = 0u32;
                for (w, t) in pat.iter().zip(&obj_words) {
                    count += (w & t).count_ones();
                }
                count as f64
            }
            Some(profile) => {
                // ascending-index compensated sum of the profile over the
                // overlap's set bits
                let mut acc = 0.0f64;
                let mut comp = 0.0f64;
                for (wi, (w, t)) in pat.iter().zip(&obj_words).enumerate() {
                    let mut bits = w & t;
                    while bits != 0 {
                        let k = bits.trailing_zeros() as usize;
                        let v = profile.cells()[wi * 64 + k];
                        let t2 = acc + v;
                        if acc.abs() >= v.abs() {
                            comp += (acc - t2) + v;
                        } else {
                            comp += (v - t2) + acc;
                        }
                        acc = t2;
                        bits &= bits - 1;
                    }
                }
                acc + comp
            }
        };
        values.push(v);
    }

    if cfg.noise_sigma > 0.0 || cfg.noise_floor > 0.0 {
        let mean = neumaier_sum(values.iter().copied()) / cfg.n as f64;
        let sigma = cfg.noise_sigma * mean + cfg.noise_floor;
        if sigma > 0.0 {
            for v in &mut values {
                *v = (*v + gaussian(rng) * sigma).max(0.0);
            }
        }
    }
    BucketSequence::new(values)
}

/// Correlates buckets against speckles to estimate the object:
/// `ΔG²(x) = ⟨S·I(x)⟩ − ⟨S⟩·⟨I(x)⟩` over the measurement ensemble.
///
/// The only way a caller learns the object from the public bucket sequence;
/// a sequence whose length no longer matches the speckle count is rejected,
/// which is how truncation attacks first surface.
pub fn reconstruct_dg2(buckets: &BucketSequence, speckles: &SpeckleSet) -> Result<GrayImage> {
    let n = speckles.count();
    if buckets.len() != n {
        return Err(FragkeyError::Protocol(format!(
            "bucket sequence has {} values, speckle set has {n}",
            buckets.len()
        )));
    }
    if n < 2 {
        return Err(FragkeyError::Protocol(
            "reconstruction needs at least 2 measurements".into(),
        ));
    }
    let pixels = speckles.width() * speckles.height();
    let values = buckets.values();

    // per-pixel illumination counts are integers; keep them exact
    let mut count1 = vec![0u32; pixels];
    // Σ S_i·I_i(x): sequential runs of PAIRWISE_LEAF measurements, combined
    // along a fixed binary tree (midpoint split, extra leaf left)
    let mut leaves: Vec<Vec<f64>> = Vec::with_capacity(n.div_ceil(PAIRWISE_LEAF));
    for chunk_start in (0..n).step_by(PAIRWISE_LEAF) {
        let mut leaf = vec![0.0f64; pixels];
        for i in chunk_start..(chunk_start + PAIRWISE_LEAF).min(n) {
            let s = values[i];
            for (wi, w) in speckles.pattern_words(i).iter().enumerate() {
                let mut bits = *w;
                while bits != 0 {
                    let idx = wi * 64 + bits.trailing_zeros() as usize;
                    leaf[idx] += s;
                    count1[idx] += 1;
                    bits &= bits - 1;
                }
            }
        }
        leaves.push(leaf);
    }
    let sum_si = combine_leaves(&leaves);

    let n_f = n as f64;
    let mean_s = neumaier_sum(values.iter().copied()) / n_f;
    let cells: Vec<f64> = (0..pixels)
        .map(|x| sum_si[x] / n_f - mean_s * (count1[x] as f64 / n_f))
        .collect();
    GrayImage::new(speckles.width(), speckles.height(), cells)
}

fn combine_leaves(leaves: &[Vec<f64>]) -> Vec<f64> {
    match leaves.len() {
        0 => unreachable!("n >= 2 yields at least one leaf"),
        1 => leaves[0].clone(),
        len => {
            let mid = len.div_ceil(2);
            let mut left = combine_leaves(&leaves[..mid]);
            let right = combine_leaves(&leaves[mid..]);
            for (l, r) in left.iter_mut().zip(&right) {
                *l += r;
            }
            left
        }
    }
}

/// Averages each `nu x nu` block of `img` down to one cell, returning the
/// pattern-resolution image. Inverse of [`upsample`] for replicated inputs.
pub fn block_means(img: &GrayImage, nu: usize) -> Result<GrayImage> {
    if nu == 0 {
        return Err(FragkeyError::Config("block size must be at least 1".into()));
    }
    if img.width() % nu != 0 || img.height() % nu != 0 {
        return Err(FragkeyError::Config(format!(
            "image {}x{} is not divisible into {nu}x{nu} blocks",
            img.width(),
            img.height()
        )));
    }
    if nu == 1 {
        return Ok(img.clone());
    }
    let (p, q) = (img.width() / nu, img.height() / nu);
    let area = (nu * nu) as f64;
    let mut cells = Vec::with_capacity(p * q);
    for br in 0..q {
        for bc in 0..p {
            // fixed row-major order inside the block
            let mut sum = 0.0;
            for r in br * nu..(br + 1) * nu {
                for c in bc * nu..(bc + 1) * nu {
                    sum += img.get(r, c);
                }
            }
            cells.push(sum / area);
        }
    }
    GrayImage::new(p, q, cells)
}

//! Random binary speckle patterns, bit-packed for fast bucket evaluation.
//!
//! A speckle set is `count` independent random 0/1 matrices at the detector
//! resolution. Pixels are stored row-major, 64 per `u64` word, so the common
//! bucket evaluation (overlap of a speckle with a binary object) reduces to
//! AND + popcount over words.

use crate::error::{FragkeyError, Result};
use crate::rng::{domain_rng, next_f64, DOMAIN_SPECKLES};
use rand_core::RngCore;
use sha2::{Digest, Sha256};

/// A deterministic set of random binary illumination patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleSet {
    count: usize,
    width: usize,
    height: usize,
    prob: f64,
    seed: u64,
    words_per: usize,
    words: Vec<u64>,
}

impl SpeckleSet {
    /// Generates `count` random binary matrices of `width x height` pixels,
    /// each pixel independently bright with probability `prob`.
    ///
    /// The same `(seed, count, width, height, prob)` always produces the same
    /// set; the draw stream is reserved for speckles so other seeded steps
    /// cannot disturb it. At `prob = 0.5` each word of 64 pixels consumes one
    /// generator output directly.
    pub fn generate(seed: u64, count: usize, width: usize, height: usize, prob: f64) -> Result<Self> {
        if count == 0 || width == 0 || height == 0 {
            return Err(FragkeyError::Config(format!(
                "speckle set needs positive count and dimensions, got {count} of {width}x{height}"
            )));
        }
        if !(prob > 0.0 && prob < 1.0) {
            return Err(FragkeyError::Config(format!(
                "speckle probability must lie strictly between 0 and 1, got {prob}"
            )));
        }
        let pixels = width * height;
        let words_per = pixels.div_ceil(64);
        let tail_bits = pixels - (words_per - 1) * 64;
        let tail_mask: u64 = if tail_bits == 64 {
            u64::MAX
        } else {
            (1u64 << tail_bits) - 1
        };

        let mut rng = domain_rng(seed, DOMAIN_SPECKLES);
        let mut words = Vec::with_capacity(count * words_per);
        for _ in 0..count {
            if prob == 0.5 {
                for w in 0..words_per {
                    let mut word = rng.next_u64();
                    if w == words_per - 1 {
                        word &= tail_mask;
                    }
                    words.push(word);
                }
            } else {
                for w in 0..words_per {
                    let bits = if w == words_per - 1 { tail_bits } else { 64 };
                    let mut word = 0u64;
                    for k in 0..bits {
                        if next_f64(&mut rng) < prob {
                            word |= 1u64 << k;
                        }
                    }
                    words.push(word);
                }
            }
        }
        Ok(Self {
            count,
            width,
            height,
            prob,
            seed,
            words_per,
            words,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn words_per_pattern(&self) -> usize {
        self.words_per
    }

    /// Packed words of measurement `i` (bit `k` of word `w` is pixel
    /// `w * 64 + k`, row-major).
    pub fn pattern_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per..(i + 1) * self.words_per]
    }

    /// Pixel value (0 or 1) of measurement `i` at flat row-major index `idx`.
    /// Convenience accessor for tests and reconstruction; the hot paths work
    /// on words.
    pub fn pixel(&self, i: usize, idx: usize) -> u8 {
        let word = self.pattern_words(i)[idx / 64];
        ((word >> (idx % 64)) & 1) as u8
    }

    /// A copy holding only the first `count` patterns. Lets a receiver whose
    /// bucket sequence arrived short still attempt a (degraded) correlation
    /// against the prefix of the shared speckle key.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.count {
            return Err(FragkeyError::Config(format!(
                "cannot truncate a {}-pattern set to {count}",
                self.count
            )));
        }
        let mut out = self.clone();
        out.count = count;
        out.words.truncate(count * self.words_per);
        Ok(out)
    }

    /// Stable identity string digest: binds the generation parameters, which
    /// fully determine the pixel data.
    pub fn identity_digest(&self) -> String {
        let id = format!(
            "speckles:v1:seed={}:n={}:w={}:h={}:prob={}",
            self.seed, self.count, self.width, self.height, self.prob
        );
        hex::encode(Sha256::digest(id.as_bytes()))
    }
}

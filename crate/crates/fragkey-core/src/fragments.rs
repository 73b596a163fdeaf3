//! Splitting a parent pattern into per-user fragments.
//!
//! The server carves the parent's bright cells into `t` disjoint fragments
//! whose cellwise sum reproduces the parent exactly. Every fragment is
//! guaranteed at least one cell so each user contributes to the synthesis.

use crate::error::{FragkeyError, Result};
use crate::pattern::{BinaryPattern, IntPattern};
use crate::rng::{shuffle, uniform_index};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How bright cells beyond the first-one-per-user round are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Each remaining cell goes to an independently uniform user.
    Uniform,
    /// Remaining cells are dealt round-robin, so sizes differ by at most one.
    Balanced,
}

impl std::str::FromStr for SplitMode {
    type Err = FragkeyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SplitMode::Uniform),
            "balanced" => Ok(SplitMode::Balanced),
            other => Err(FragkeyError::Config(format!(
                "unknown split mode {other:?} (expected uniform or balanced)"
            ))),
        }
    }
}

/// A parent pattern together with its disjoint fragments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentSet {
    pub parent: BinaryPattern,
    pub fragments: Vec<BinaryPattern>,
}

/// Splits `parent` into `t` disjoint fragments covering its bright cells.
///
/// The bright cells are shuffled; the first `t` go one to each user, and the
/// rest are assigned per `mode`. Errors if the parent has fewer bright cells
/// than users.
pub fn split_fragments(
    parent: &BinaryPattern,
    t: usize,
    mode: SplitMode,
    rng: &mut ChaCha8Rng,
) -> Result<FragmentSet> {
    if t == 0 {
        return Err(FragkeyError::Split("cannot split among zero users".into()));
    }
    let mut bright = parent.bright_indices();
    if bright.len() < t {
        return Err(FragkeyError::Split(format!(
            "parent has {} bright cells, fewer than {t} users",
            bright.len()
        )));
    }
    shuffle(rng, &mut bright);

    let mut cells = vec![vec![0u8; parent.width() * parent.height()]; t];
    for (u, &idx) in bright.iter().take(t).enumerate() {
        cells[u][idx] = 1;
    }
    for (i, &idx) in bright.iter().skip(t).enumerate() {
        let u = match mode {
            SplitMode::Uniform => uniform_index(rng, t),
            SplitMode::Balanced => i % t,
        };
        cells[u][idx] = 1;
    }

    let fragments = cells
        .into_iter()
        .map(|c| BinaryPattern::new(parent.width(), parent.height(), c))
        .collect::<Result<Vec<_>>>()?;
    Ok(FragmentSet {
        parent: parent.clone(),
        fragments,
    })
}

/// Cellwise sum of patterns (the synthesis step). Errors on dimension
/// mismatch or an empty slice.
pub fn overlay(patterns: &[BinaryPattern]) -> Result<IntPattern> {
    let first = patterns
        .first()
        .ok_or_else(|| FragkeyError::Protocol("overlay of zero patterns".into()))?;
    let mut sum = IntPattern::zeros(first.width(), first.height());
    for p in patterns {
        sum.add_pattern(p)?;
    }
    Ok(sum)
}

//! Public-channel adversary: five ways to corrupt a bucket sequence.
//!
//! Bucket sequences are the only protocol data exposed to the open network,
//! so attacks operate on them alone. Every attack is deterministic given its
//! spec, which makes detection experiments exactly repeatable.

use crate::buckets::BucketSequence;
use crate::error::{FragkeyError, Result};
use crate::gi::neumaier_sum;
use crate::rng::{choose_distinct, domain_rng, gaussian, next_f64, shuffle, DOMAIN_ATTACK};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The attack taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    /// Randomly permute the whole sequence (order carries the image).
    Disorder,
    /// Replace the sequence with i.i.d. draws matching its mean and
    /// variance — the strongest forgery available without the speckle key.
    Forge,
    /// Overwrite a fraction of entries with uniform draws on [0, 2·mean].
    Tamper,
    /// Delete a fraction of entries (the sequence arrives short).
    Discard,
    /// Zero out a fraction of entries.
    ZeroSet,
}

pub const ALL_ATTACK_KINDS: [AttackKind; 5] = [
    AttackKind::Disorder,
    AttackKind::Forge,
    AttackKind::Tamper,
    AttackKind::Discard,
    AttackKind::ZeroSet,
];

impl FromStr for AttackKind {
    type Err = FragkeyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disorder" => Ok(AttackKind::Disorder),
            "forge" => Ok(AttackKind::Forge),
            "tamper" => Ok(AttackKind::Tamper),
            "discard" => Ok(AttackKind::Discard),
            "zeroset" => Ok(AttackKind::ZeroSet),
            other => Err(FragkeyError::Config(format!("unknown attack kind {other:?}"))),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AttackKind::Disorder => "disorder",
            AttackKind::Forge => "forge",
            AttackKind::Tamper => "tamper",
            AttackKind::Discard => "discard",
            AttackKind::ZeroSet => "zeroset",
        };
        write!(f, "{name}")
    }
}

/// One configured attack instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Fraction of the sequence affected, in (0, 1]. Disorder and Forge act
    /// on the whole sequence and ignore it.
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    /// Which user's public broadcast is intercepted.
    #[serde(default)]
    pub target_user: usize,
    /// Adversary randomness; independent of all protocol streams.
    #[serde(default)]
    pub seed: u64,
}

fn default_fraction() -> f64 {
    0.01
}

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            fraction: default_fraction(),
            target_user: 0,
            seed: 0,
        }
    }
}

/// Applies `spec` to a bucket sequence in transit.
///
/// The affected count is `ceil(fraction · L)`, so any positive fraction
/// touches at least one value. Forged and tampered values are clamped to
/// stay non-negative like genuine bucket readings.
pub fn attack(seq: &BucketSequence, spec: &AttackSpec) -> Result<BucketSequence> {
    if !(spec.fraction > 0.0 && spec.fraction <= 1.0) {
        return Err(FragkeyError::Config(format!(
            "attack fraction must lie in (0, 1], got {}",
            spec.fraction
        )));
    }
    let mut rng = domain_rng(spec.seed, DOMAIN_ATTACK);
    let values = seq.values();
    let len = values.len();
    let k = (spec.fraction * len as f64).ceil() as usize;
    let mean = neumaier_sum(values.iter().copied()) / len as f64;

    let out = match spec.kind {
        AttackKind::Disorder => {
            let mut v = values.to_vec();
            shuffle(&mut rng, &mut v);
            v
        }
        AttackKind::Forge => {
            let var = neumaier_sum(values.iter().map(|&v| (v - mean) * (v - mean))) / len as f64;
            let sd = var.sqrt();
            (0..len).map(|_| (mean + sd * gaussian(&mut rng)).max(0.0)).collect()
        }
        AttackKind::Tamper => {
            let mut v = values.to_vec();
            for idx in choose_distinct(&mut rng, len, k) {
                v[idx] = next_f64(&mut rng) * 2.0 * mean;
            }
            v
        }
        AttackKind::Discard => {
            let mut keep = vec![true; len];
            for idx in choose_distinct(&mut rng, len, k) {
                keep[idx] = false;
            }
            values
                .iter()
                .zip(keep)
                .filter_map(|(&v, k)| k.then_some(v))
                .collect()
        }
        AttackKind::ZeroSet => {
            let mut v = values.to_vec();
            for idx in choose_distinct(&mut rng, len, k) {
                v[idx] = 0.0;
            }
            v
        }
    };
    BucketSequence::new(out)
}

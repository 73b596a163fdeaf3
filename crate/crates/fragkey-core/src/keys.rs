//! Cryptographic key extraction from an authenticated synthesis pattern.
//!
//! After the intermediary vouches for the synthesis, each user reads their
//! private symbol library at the cells selected by their own fragment. The
//! server applies the same rule to the fragments it dealt, which is the
//! correctness oracle for the whole pipeline: an unattacked session must end
//! with every user's key equal to the server's expectation.

use crate::error::{FragkeyError, Result};
use crate::keylib::KeyLibrary;
use crate::pattern::BinaryPattern;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// An extracted symbol string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CryptoKey {
    pub symbols: String,
}

/// Which cells of the fragment index the library.
///
/// Bright-cell indexing is the default; dark-cell indexing is the flipped
/// convention, selectable per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyIndexing {
    Bright,
    Dark,
}

impl Default for KeyIndexing {
    fn default() -> Self {
        KeyIndexing::Bright
    }
}

impl FromStr for KeyIndexing {
    type Err = FragkeyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bright" => Ok(KeyIndexing::Bright),
            "dark" => Ok(KeyIndexing::Dark),
            other => Err(FragkeyError::Config(format!("unknown key indexing {other:?}"))),
        }
    }
}

fn selected_indices(fragment: &BinaryPattern, indexing: KeyIndexing) -> Vec<usize> {
    let want = match indexing {
        KeyIndexing::Bright => 1u8,
        KeyIndexing::Dark => 0u8,
    };
    fragment
        .cells()
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v == want).then_some(i))
        .collect()
}

fn read_library(
    fragment: &BinaryPattern,
    library: &KeyLibrary,
    indexing: KeyIndexing,
) -> Result<CryptoKey> {
    if fragment.width() != library.width() || fragment.height() != library.height() {
        return Err(FragkeyError::Extraction(format!(
            "fragment is {}x{}, key library is {}x{}",
            fragment.width(),
            fragment.height(),
            library.width(),
            library.height()
        )));
    }
    let symbols = selected_indices(fragment, indexing)
        .into_iter()
        .map(|i| library.at(i))
        .collect();
    Ok(CryptoKey { symbols })
}

/// User-side extraction: requires the user's fragment to be consistent with
/// the returned synthesis pattern (every owned bright cell must appear in
/// it), then reads the library at the fragment's cells in row-major order.
pub fn extract_key(
    fsp: &BinaryPattern,
    own_fragment: &BinaryPattern,
    library: &KeyLibrary,
    indexing: KeyIndexing,
) -> Result<CryptoKey> {
    if fsp.width() != own_fragment.width() || fsp.height() != own_fragment.height() {
        return Err(FragkeyError::Extraction(format!(
            "synthesis pattern is {}x{}, fragment is {}x{}",
            fsp.width(),
            fsp.height(),
            own_fragment.width(),
            own_fragment.height()
        )));
    }
    if !own_fragment.is_subset_of(fsp) {
        return Err(FragkeyError::Extraction(
            "fragment has bright cells missing from the synthesis pattern".into(),
        ));
    }
    read_library(own_fragment, library, indexing)
}

/// Server-side expectation: the same reading rule applied to the fragment
/// the server dealt, with no synthesis consistency check.
pub fn server_expected_key(
    fragment: &BinaryPattern,
    library: &KeyLibrary,
    indexing: KeyIndexing,
) -> Result<CryptoKey> {
    read_library(fragment, library, indexing)
}

use thiserror::Error;

/// Error type shared across the crate.
///
/// Variants mirror the failure classes of the protocol: configuration
/// problems, file-format problems, fragment-splitting preconditions,
/// binarization degeneracy, protocol-level violations, and key-extraction
/// inconsistencies.
#[derive(Debug, Error)]
pub enum FragkeyError {
    /// Invalid parameter combination (dimensions, ratios, fractions, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed serialized data (PBM, CSV, JSON payloads).
    #[error("format error: {0}")]
    Format(String),

    /// Fragment split precondition failed (fewer bright cells than users).
    #[error("split error: {0}")]
    Split(String),

    /// Binarization cannot proceed: all block means are equal, so there is
    /// no contrast to threshold.
    #[error("binarize error: insufficient contrast ({0})")]
    InsufficientContrast(String),

    /// Protocol-level violation (length mismatches, dimension mismatches
    /// between messages, sessions in an impossible state).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Key extraction found inconsistent session state (claimed fragment not
    /// contained in the synthesis pattern).
    #[error("extraction error: {0}")]
    Extraction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FragkeyError>;

//! Deterministic simulator of a multiparty key-distribution protocol built on
//! computational ghost imaging.
//!
//! A server encodes disjoint binary fragment patterns into sequences of
//! single-pixel (bucket) values using a seeded ghost-imaging forward model and
//! broadcasts the sequences over a public channel. Each user reconstructs their
//! fragment from the shared speckle key via second-order intensity correlation,
//! an intermediary authenticates the session by overlaying all reconstructed
//! fragments (the synthesis must be binary and equal the expected parent
//! pattern), and authenticated users read their cryptographic keys out of
//! private symbol libraries. An attack layer injects public-channel
//! manipulations, and an experiments module sweeps sampling ratios and attack
//! scenarios.
//!
//! Everything is reproducible: a single `u64` seed determines speckles,
//! fragment splits, symbol libraries, detector noise, and attacks through
//! fixed, documented RNG substreams, and all floating-point reductions use
//! fixed summation orders.

pub mod attack;
pub mod binarize;
pub mod buckets;
pub mod error;
pub mod experiments;
pub mod fragments;
pub mod gi;
pub mod image;
pub mod keylib;
pub mod keys;
pub mod pattern;
pub mod protocol;
pub mod rng;
pub mod shapes;
pub mod speckles;

pub use attack::{attack, AttackKind, AttackSpec, ALL_ATTACK_KINDS};
pub use binarize::{binarize, binarize_smooth, binarize_sort, BinarizeMethod};
pub use buckets::BucketSequence;
pub use error::FragkeyError;
pub use experiments::{
    attack_demo_config, attack_matrix, attack_trial_config, control_trial_config,
    default_percent_grid, oversampled_config, sweep_subsampling, AttackMatrix,
    AttackMatrixConfig, AttackRow, SweepConfig, SweepPoint, SweepResult, SweepSeries,
    ATTACK_DEMO_TARGET,
};
pub use fragments::{overlay, split_fragments, FragmentSet, SplitMode};
pub use gi::{
    block_means, center_profile, measure, reconstruct_dg2, upsample, MeasurementConfig,
    SourceProfile,
};
pub use image::GrayImage;
pub use keylib::{make_key_library, KeyLibrary};
pub use keys::{extract_key, server_expected_key, CryptoKey, KeyIndexing};
pub use pattern::{BinaryPattern, IntPattern};
pub use protocol::{
    audit_channel_discipline, expected_keys, intermediary_return, intermediary_synthesize,
    run_session, server_distribute, server_prepare, user_reconstruct, ChannelKind,
    ChannelMessage, Evidence, MethodChoice, Party, Payload, PreparedSession, SessionConfig,
    SessionTranscript, Verdict,
};
pub use shapes::{make_regular_pattern, Ratio, Shape};
pub use speckles::SpeckleSet;

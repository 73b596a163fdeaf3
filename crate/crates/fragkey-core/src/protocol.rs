//! The three-role key-distribution session: server, users, intermediary.
//!
//! A session runs in six stages. The server deals initial keys over private
//! channels (a symbol library per user plus the shared speckle set), splits
//! a regular parent pattern into per-user fragments, and broadcasts each
//! fragment only as a bucket-value sequence on the public channel — the one
//! place an adversary can interfere. Each user correlates their received
//! sequence against the shared speckles, binarizes the result, and submits
//! the claimed fragment to the intermediary over a private channel. The
//! intermediary overlays all claims: the session authenticates only if the
//! overlay is strictly binary and reproduces the expected parent registered
//! by the server. Only then do users read keys out of their libraries.
//!
//! Everything is a pure function of the [`SessionConfig`]: replaying a
//! config yields a byte-identical transcript. Distinct random streams are
//! derived per purpose (split, speckles, per-user noise, libraries) so no
//! stage's draws can disturb another's.

use crate::attack::{attack, AttackSpec};
use crate::binarize::{binarize, BinarizeMethod};
use crate::buckets::BucketSequence;
use crate::error::{FragkeyError, Result};
use crate::fragments::{overlay, split_fragments, FragmentSet, SplitMode};
use crate::gi::{measure, reconstruct_dg2, upsample, MeasurementConfig, SourceProfile};
use crate::keylib::{make_key_library, KeyLibrary};
use crate::keys::{extract_key, server_expected_key, CryptoKey, KeyIndexing};
use crate::pattern::{BinaryPattern, IntPattern};
use crate::rng::{domain_rng, DOMAIN_LIBRARY_BASE, DOMAIN_NOISE_BASE, DOMAIN_SPLIT};
use crate::shapes::{make_regular_pattern, Ratio, Shape};
use crate::speckles::SpeckleSet;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Which binarization rule the users apply. Sorting derives each user's
/// bright count from their own dealt fragment at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Smoothing,
    Sorting,
}

impl FromStr for MethodChoice {
    type Err = FragkeyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smoothing" => Ok(MethodChoice::Smoothing),
            "sorting" => Ok(MethodChoice::Sorting),
            other => Err(FragkeyError::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Full description of one session; the transcript is a pure function of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Number of users the parent pattern is split among.
    pub users: usize,
    pub width: usize,
    pub height: usize,
    /// Upsampling factor: detector runs at `width·nu x height·nu`.
    pub nu: usize,
    pub n_measurements: usize,
    pub shape: Shape,
    /// Dark:bright ratio; `None` selects the shape's default size.
    #[serde(default)]
    pub ratio: Option<Ratio>,
    #[serde(default = "default_split")]
    pub split: SplitMode,
    #[serde(default = "default_method")]
    pub method: MethodChoice,
    pub seed: u64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_floor: f64,
    #[serde(default = "default_speckle_prob")]
    pub speckle_prob: f64,
    #[serde(default)]
    pub profile: SourceProfile,
    #[serde(default = "default_alphabet")]
    pub key_alphabet: String,
    #[serde(default)]
    pub key_indexing: KeyIndexing,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    /// On a short bucket sequence, correlate against the speckle prefix
    /// instead of submitting an all-dark claim. Either way the length
    /// mismatch itself is reported as evidence.
    #[serde(default)]
    pub truncate_on_length_mismatch: bool,
}

fn default_split() -> SplitMode {
    SplitMode::Uniform
}

fn default_method() -> MethodChoice {
    MethodChoice::Smoothing
}

fn default_speckle_prob() -> f64 {
    0.5
}

fn default_alphabet() -> String {
    ('A'..='Z').collect()
}

impl SessionConfig {
    /// A config with every optional knob at its default.
    pub fn new(users: usize, width: usize, height: usize, nu: usize, n_measurements: usize) -> Self {
        Self {
            users,
            width,
            height,
            nu,
            n_measurements,
            shape: Shape::Rhombus,
            ratio: None,
            split: default_split(),
            method: default_method(),
            seed: 0,
            noise_sigma: 0.0,
            noise_floor: 0.0,
            speckle_prob: default_speckle_prob(),
            profile: SourceProfile::Flat,
            key_alphabet: default_alphabet(),
            key_indexing: KeyIndexing::Bright,
            attack: None,
            truncate_on_length_mismatch: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(FragkeyError::Config("at least one user is required".into()));
        }
        if self.key_alphabet.is_empty() {
            return Err(FragkeyError::Config("key alphabet must not be empty".into()));
        }
        if let Some(spec) = &self.attack {
            if spec.target_user >= self.users {
                return Err(FragkeyError::Config(format!(
                    "attack targets user {} but the session has {} users",
                    spec.target_user, self.users
                )));
            }
        }
        // delegate the numeric checks to the measurement layer
        MeasurementConfig::new(self.n_measurements, self.nu)?
            .with_noise(self.noise_sigma)?
            .with_floor(self.noise_floor)?;
        Ok(())
    }
}

/// The two channel classes. Bucket sequences travel in the open; initial
/// keys, claims, verdicts, and keys never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Server,
    User(usize),
    Intermediary,
}

/// Everything that crosses a channel during a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// Shared speckle key dealt to a user (identity digest, not pixels).
    SpeckleKeyRegistration { digest: String },
    /// Per-user symbol library dealt privately.
    LibraryRegistration { user: usize },
    /// The receiver's advance knowledge of their fragment's bright count
    /// (what the sorting method consumes).
    BrightCountNotice { user: usize, bright_count: usize },
    /// Parent pattern registered with the intermediary for validation.
    ExpectedParentRegistration { pbm: String },
    /// The only public transmission: one user's bucket sequence.
    BucketBroadcast { user: usize, len: usize, digest: String },
    /// A user's reconstructed fragment claim.
    ClaimSubmission { user: usize, pbm: String },
    /// Synthesis pattern returned to a user.
    FspReturn { user: usize },
    /// Authentication outcome returned to a user.
    VerdictReturn { user: usize, authentic: bool },
    /// Order to discard this session's keys and rerun with a fresh seed.
    RekeyInstruction { user: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMessage {
    pub channel: ChannelKind,
    pub from: Party,
    pub to: Party,
    pub payload: Payload,
}

/// Confirms that bucket broadcasts are the only public traffic and that
/// everything else stayed private.
pub fn audit_channel_discipline(messages: &[ChannelMessage]) -> Result<()> {
    for msg in messages {
        let public = matches!(msg.payload, Payload::BucketBroadcast { .. });
        let expected = if public { ChannelKind::Public } else { ChannelKind::Private };
        if msg.channel != expected {
            return Err(FragkeyError::Protocol(format!(
                "channel discipline violated: {:?} sent on {:?} channel",
                msg.payload, msg.channel
            )));
        }
    }
    Ok(())
}

/// A concrete reason the synthesis failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Two or more claims light the same cell — the fast tell.
    Overlap { row: usize, col: usize, value: u32 },
    /// The overlay is binary but disagrees with the expected parent.
    Mismatch { row: usize, col: usize, fsp: u32, expected: u8 },
    /// A user's bucket sequence arrived with the wrong length.
    LengthMismatch { user: usize, expected: usize, got: usize },
    /// A user could not binarize their reconstruction.
    ReconstructFailure { user: usize, reason: String },
}

/// Authentication outcome. `Attacked` always carries at least one piece of
/// evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Authentic,
    Attacked { evidence: Vec<Evidence> },
}

impl Verdict {
    pub fn is_authentic(&self) -> bool {
        matches!(self, Verdict::Authentic)
    }
}

/// Complete record of one session; serializing it twice for the same config
/// yields identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    /// Parent bright count actually realized (ratio rounding, user floor).
    pub realized_bright: usize,
    pub parent_pbm: String,
    pub fragment_pbms: Vec<String>,
    pub messages: Vec<ChannelMessage>,
    /// Sequences as received by each user (after any in-transit attack), so
    /// a tampered session shows a digest differing from its broadcast.
    pub received_digests: Vec<String>,
    pub received_lengths: Vec<usize>,
    pub claim_pbms: Vec<String>,
    pub fsp: IntPattern,
    pub verdict: Verdict,
    /// Present only on an authentic verdict.
    pub keys: Option<Vec<CryptoKey>>,
}

impl SessionTranscript {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Server state after key preparation.
pub struct PreparedSession {
    pub fragments: FragmentSet,
    pub speckles: SpeckleSet,
    pub libraries: Vec<KeyLibrary>,
    pub measurement: MeasurementConfig,
}

/// Stage 1–2: deal initial keys, split the parent, register the expected
/// pattern with the intermediary. All traffic here is private.
pub fn server_prepare(
    cfg: &SessionConfig,
    log: &mut Vec<ChannelMessage>,
) -> Result<PreparedSession> {
    cfg.validate()?;
    let parent = make_regular_pattern(cfg.shape, cfg.width, cfg.height, cfg.ratio, 1)?;
    let fragments = split_fragments(
        &parent,
        cfg.users,
        cfg.split,
        &mut domain_rng(cfg.seed, DOMAIN_SPLIT),
    )?;
    let alphabet: Vec<char> = cfg.key_alphabet.chars().collect();
    let libraries: Vec<KeyLibrary> = (0..cfg.users)
        .map(|u| {
            make_key_library(
                cfg.width,
                cfg.height,
                &alphabet,
                &mut domain_rng(cfg.seed, DOMAIN_LIBRARY_BASE + u as u64),
            )
        })
        .collect::<Result<_>>()?;
    let speckles = SpeckleSet::generate(
        cfg.seed,
        cfg.n_measurements,
        cfg.width * cfg.nu,
        cfg.height * cfg.nu,
        cfg.speckle_prob,
    )?;
    let mut measurement = MeasurementConfig::new(cfg.n_measurements, cfg.nu)?
        .with_noise(cfg.noise_sigma)?
        .with_floor(cfg.noise_floor)?;
    if let Some(profile) = cfg
        .profile
        .resolve(cfg.width * cfg.nu, cfg.height * cfg.nu)?
    {
        measurement = measurement.with_profile(profile)?;
    }

    for u in 0..cfg.users {
        log.push(ChannelMessage {
            channel: ChannelKind::Private,
            from: Party::Server,
            to: Party::User(u),
            payload: Payload::SpeckleKeyRegistration {
                digest: speckles.identity_digest(),
            },
        });
        log.push(ChannelMessage {
            channel: ChannelKind::Private,
            from: Party::Server,
            to: Party::User(u),
            payload: Payload::LibraryRegistration { user: u },
        });
        log.push(ChannelMessage {
            channel: ChannelKind::Private,
            from: Party::Server,
            to: Party::User(u),
            payload: Payload::BrightCountNotice {
                user: u,
                bright_count: fragments.fragments[u].bright_count(),
            },
        });
    }
    log.push(ChannelMessage {
        channel: ChannelKind::Private,
        from: Party::Server,
        to: Party::Intermediary,
        payload: Payload::ExpectedParentRegistration {
            pbm: fragments.parent.to_pbm(),
        },
    });

    Ok(PreparedSession {
        fragments,
        speckles,
        libraries,
        measurement,
    })
}

/// Stage 3: encode every fragment into a bucket sequence and broadcast it on
/// the public channel. Per-user noise streams are independent.
pub fn server_distribute(
    prep: &PreparedSession,
    cfg: &SessionConfig,
    log: &mut Vec<ChannelMessage>,
) -> Result<Vec<BucketSequence>> {
    let mut sequences = Vec::with_capacity(cfg.users);
    for (u, fragment) in prep.fragments.fragments.iter().enumerate() {
        let object = upsample(fragment, cfg.nu)?;
        let buckets = measure(
            &object,
            &prep.speckles,
            &prep.measurement,
            &mut domain_rng(cfg.seed, DOMAIN_NOISE_BASE + u as u64),
        )?;
        log.push(ChannelMessage {
            channel: ChannelKind::Public,
            from: Party::Server,
            to: Party::User(u),
            payload: Payload::BucketBroadcast {
                user: u,
                len: buckets.len(),
                digest: buckets.digest(),
            },
        });
        sequences.push(buckets);
    }
    Ok(sequences)
}

/// Stage 4, single user: correlate the received sequence against the shared
/// speckles and binarize the result into a fragment claim.
pub fn user_reconstruct(
    buckets: &BucketSequence,
    speckles: &SpeckleSet,
    method: &BinarizeMethod,
    nu: usize,
) -> Result<BinaryPattern> {
    let image = reconstruct_dg2(buckets, speckles)?;
    binarize(&image, nu, method)
}

/// Stage 5: overlay all claims and compare against the expected parent.
/// Evidence lists every overlapping cell (value > 1) and every cell where
/// the overlay disagrees with the expectation.
pub fn intermediary_synthesize(
    claims: &[BinaryPattern],
    expected: &BinaryPattern,
) -> Result<(IntPattern, Verdict)> {
    let fsp = overlay(claims)?;
    if fsp.width() != expected.width() || fsp.height() != expected.height() {
        return Err(FragkeyError::Protocol(format!(
            "synthesis is {}x{}, expected pattern is {}x{}",
            fsp.width(),
            fsp.height(),
            expected.width(),
            expected.height()
        )));
    }
    let mut evidence = Vec::new();
    for row in 0..fsp.height() {
        for col in 0..fsp.width() {
            let v = fsp.get(row, col);
            let e = expected.get(row, col);
            if v > 1 {
                evidence.push(Evidence::Overlap { row, col, value: v });
            } else if v != e as u32 {
                evidence.push(Evidence::Mismatch { row, col, fsp: v, expected: e });
            }
        }
    }
    let verdict = if evidence.is_empty() {
        Verdict::Authentic
    } else {
        Verdict::Attacked { evidence }
    };
    Ok((fsp, verdict))
}

/// Stage 6: return the synthesis and verdict to every user privately; on an
/// attack, instruct everyone to discard this session's keys.
pub fn intermediary_return(
    verdict: &Verdict,
    users: usize,
    log: &mut Vec<ChannelMessage>,
) {
    for u in 0..users {
        log.push(ChannelMessage {
            channel: ChannelKind::Private,
            from: Party::Intermediary,
            to: Party::User(u),
            payload: Payload::FspReturn { user: u },
        });
        log.push(ChannelMessage {
            channel: ChannelKind::Private,
            from: Party::Intermediary,
            to: Party::User(u),
            payload: Payload::VerdictReturn {
                user: u,
                authentic: verdict.is_authentic(),
            },
        });
        if !verdict.is_authentic() {
            log.push(ChannelMessage {
                channel: ChannelKind::Private,
                from: Party::Intermediary,
                to: Party::User(u),
                payload: Payload::RekeyInstruction { user: u },
            });
        }
    }
}

/// Runs one complete session. Pure: the transcript is fully determined by
/// the config.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionTranscript> {
    let mut log = Vec::new();
    let prep = server_prepare(cfg, &mut log)?;
    let sent = server_distribute(&prep, cfg, &mut log)?;

    // the adversary sits between broadcast and reception
    let mut received = sent;
    if let Some(spec) = &cfg.attack {
        received[spec.target_user] = attack(&received[spec.target_user], spec)?;
    }
    let received_digests: Vec<String> = received.iter().map(|b| b.digest()).collect();
    let received_lengths: Vec<usize> = received.iter().map(|b| b.len()).collect();

    let mut channel_evidence = Vec::new();
    let mut claims = Vec::with_capacity(cfg.users);
    for (u, buckets) in received.iter().enumerate() {
        let method = match cfg.method {
            MethodChoice::Smoothing => BinarizeMethod::Smoothing,
            MethodChoice::Sorting => BinarizeMethod::Sorting {
                bright_count: prep.fragments.fragments[u].bright_count(),
            },
        };
        let claim = if buckets.len() != cfg.n_measurements {
            channel_evidence.push(Evidence::LengthMismatch {
                user: u,
                expected: cfg.n_measurements,
                got: buckets.len(),
            });
            let truncated = (cfg.truncate_on_length_mismatch && buckets.len() >= 2)
                .then(|| prep.speckles.truncated(buckets.len()))
                .transpose()?;
            match truncated {
                Some(speckles) => user_reconstruct(buckets, &speckles, &method, cfg.nu)
                    .unwrap_or_else(|_| BinaryPattern::dark(cfg.width, cfg.height)),
                None => BinaryPattern::dark(cfg.width, cfg.height),
            }
        } else {
            match user_reconstruct(buckets, &prep.speckles, &method, cfg.nu) {
                Ok(claim) => claim,
                Err(e) => {
                    channel_evidence.push(Evidence::ReconstructFailure {
                        user: u,
                        reason: e.to_string(),
                    });
                    BinaryPattern::dark(cfg.width, cfg.height)
                }
            }
        };
        log.push(ChannelMessage {
            channel: ChannelKind::Private,
            from: Party::User(u),
            to: Party::Intermediary,
            payload: Payload::ClaimSubmission { user: u, pbm: claim.to_pbm() },
        });
        claims.push(claim);
    }

    let (fsp, cell_verdict) = intermediary_synthesize(&claims, &prep.fragments.parent)?;
    let verdict = if channel_evidence.is_empty() {
        cell_verdict
    } else {
        let mut evidence = channel_evidence;
        if let Verdict::Attacked { evidence: cells } = cell_verdict {
            evidence.extend(cells);
        }
        Verdict::Attacked { evidence }
    };
    intermediary_return(&verdict, cfg.users, &mut log);

    let keys = if verdict.is_authentic() {
        let fsp_binary = fsp
            .to_binary()
            .expect("authentic synthesis is binary by definition");
        Some(
            claims
                .iter()
                .zip(&prep.libraries)
                .map(|(claim, lib)| extract_key(&fsp_binary, claim, lib, cfg.key_indexing))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    Ok(SessionTranscript {
        config: cfg.clone(),
        realized_bright: prep.fragments.parent.bright_count(),
        parent_pbm: prep.fragments.parent.to_pbm(),
        fragment_pbms: prep.fragments.fragments.iter().map(|f| f.to_pbm()).collect(),
        messages: log,
        received_digests,
        received_lengths,
        claim_pbms: claims.iter().map(|c| c.to_pbm()).collect(),
        fsp,
        verdict,
        keys,
    })
}

/// The server's own answer sheet for a prepared session: what each user's
/// key must come out to be.
pub fn expected_keys(prep: &PreparedSession, indexing: KeyIndexing) -> Result<Vec<CryptoKey>> {
    prep.fragments
        .fragments
        .iter()
        .zip(&prep.libraries)
        .map(|(frag, lib)| server_expected_key(frag, lib, indexing))
        .collect()
}

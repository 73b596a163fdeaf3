//! Property checks shared between the standalone `properties` target and the
//! acceptance gate. Every check is deterministic: cases are generated from
//! fixed seeds, so a failure always reproduces.

#![allow(dead_code)]

use fragkey_core::rng::{domain_rng, seeded_rng, uniform_index, DOMAIN_NOISE_BASE};
use fragkey_core::*;
use rand_chacha::ChaCha8Rng;

/// Random pattern with at least one bright cell, dims 2..=8 per side.
pub fn random_pattern(rng: &mut ChaCha8Rng) -> BinaryPattern {
    let width = 2 + uniform_index(rng, 7);
    let height = 2 + uniform_index(rng, 7);
    let density = 0.2 + 0.6 * rng::next_f64(rng);
    let mut cells: Vec<u8> = (0..width * height)
        .map(|_| u8::from(rng::next_f64(rng) < density))
        .collect();
    let forced = uniform_index(rng, cells.len());
    cells[forced] = 1;
    BinaryPattern::new(width, height, cells).unwrap()
}

/// Splits random patterns and asserts the share-structure invariants:
/// every fragment is a nonempty subset of the parent, fragments are pairwise
/// disjoint, and their overlay reproduces the parent exactly.
pub fn check_split_invariants(cases: usize) {
    let mut rng = seeded_rng(0x5EED_0001);
    for case in 0..cases {
        let parent = random_pattern(&mut rng);
        let bright = parent.bright_count();
        let t = 1 + uniform_index(&mut rng, bright.min(6));
        let mode = if case % 2 == 0 {
            SplitMode::Uniform
        } else {
            SplitMode::Balanced
        };
        let mut split_rng = seeded_rng(case as u64);
        let set = split_fragments(&parent, t, mode, &mut split_rng).unwrap();
        assert_eq!(set.fragments.len(), t, "case {case}: wrong fragment count");
        for (u, frag) in set.fragments.iter().enumerate() {
            assert!(
                frag.bright_count() >= 1,
                "case {case}: user {u} got an empty fragment"
            );
            assert!(
                frag.is_subset_of(&parent),
                "case {case}: user {u} fragment leaves the parent"
            );
        }
        let sum = overlay(&set.fragments).unwrap();
        assert!(
            sum.is_binary(),
            "case {case}: fragments overlap (overlay not binary)"
        );
        assert_eq!(
            sum.to_binary().unwrap(),
            parent,
            "case {case}: overlay does not reproduce the parent"
        );
    }
}

/// Noiseless flat-field bucket sequences are exactly additive over disjoint
/// objects: measuring two disjoint fragments separately and summing equals
/// measuring their union, value for value.
pub fn check_measure_linearity(cases: usize) {
    let mut rng = seeded_rng(0x5EED_0002);
    for case in 0..cases {
        let parent = random_pattern(&mut rng);
        if parent.bright_count() < 2 {
            continue;
        }
        let mut split_rng = seeded_rng(case as u64);
        let set = split_fragments(&parent, 2, SplitMode::Uniform, &mut split_rng).unwrap();
        let nu = 2;
        let cfg = MeasurementConfig::new(50, nu).unwrap();
        let speckles = SpeckleSet::generate(
            case as u64,
            50,
            parent.width() * nu,
            parent.height() * nu,
            0.5,
        )
        .unwrap();
        let total = measure(
            &upsample(&parent, nu).unwrap(),
            &speckles,
            &cfg,
            &mut domain_rng(case as u64, DOMAIN_NOISE_BASE),
        )
        .unwrap();
        let part_a = measure(
            &upsample(&set.fragments[0], nu).unwrap(),
            &speckles,
            &cfg,
            &mut domain_rng(case as u64, DOMAIN_NOISE_BASE),
        )
        .unwrap();
        let part_b = measure(
            &upsample(&set.fragments[1], nu).unwrap(),
            &speckles,
            &cfg,
            &mut domain_rng(case as u64, DOMAIN_NOISE_BASE),
        )
        .unwrap();
        for i in 0..total.len() {
            assert_eq!(
                part_a.values()[i] + part_b.values()[i],
                total.values()[i],
                "case {case}: bucket {i} not additive"
            );
        }
    }
}

/// Dyadic value in [0, 8): exact under the affine maps used below.
fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    uniform_index(rng, 2048) as f64 / 256.0
}

/// Sorting binarization lights exactly the requested number of units, no
/// matter how the values tie or cluster.
pub fn check_sort_popcount(cases: usize) {
    let mut rng = seeded_rng(0x5EED_0003);
    for case in 0..cases {
        let width = 1 + uniform_index(&mut rng, 5);
        let height = 1 + uniform_index(&mut rng, 5);
        let nu = 1 + uniform_index(&mut rng, 2);
        let values: Vec<f64> = (0..width * nu * height * nu)
            .map(|_| dyadic(&mut rng))
            .collect();
        let img = GrayImage::new(width * nu, height * nu, values).unwrap();
        let m = uniform_index(&mut rng, width * height + 1);
        let out = binarize_sort(&img, nu, m).unwrap();
        assert_eq!(
            out.bright_count(),
            m,
            "case {case}: sort lit {} units, asked for {m}",
            out.bright_count()
        );
    }
}

/// Both binarizers are invariant under positive affine maps of the input.
/// Values and coefficients are dyadic so the mapped arithmetic is exact and
/// the property holds with equality, not tolerance.
pub fn check_affine_invariance(cases: usize) {
    const SCALES: [f64; 5] = [0.5, 1.5, 2.0, 2.75, 4.0];
    const OFFSETS: [f64; 4] = [-3.0, 0.0, 0.5, 10.0];
    let mut rng = seeded_rng(0x5EED_0004);
    for case in 0..cases {
        let width = 2 + uniform_index(&mut rng, 4);
        let height = 2 + uniform_index(&mut rng, 4);
        let nu = 1 + uniform_index(&mut rng, 2);
        let pixels = width * nu * height * nu;
        let a = SCALES[uniform_index(&mut rng, SCALES.len())];
        let b = OFFSETS[uniform_index(&mut rng, OFFSETS.len())];

        // sorting: any dyadic values
        let values: Vec<f64> = (0..pixels).map(|_| dyadic(&mut rng)).collect();
        let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let img = GrayImage::new(width * nu, height * nu, values).unwrap();
        let img_mapped = GrayImage::new(width * nu, height * nu, mapped).unwrap();
        let m = uniform_index(&mut rng, width * height + 1);
        assert_eq!(
            binarize_sort(&img, nu, m).unwrap(),
            binarize_sort(&img_mapped, nu, m).unwrap(),
            "case {case}: sorting not affine-invariant (a={a}, b={b})"
        );

        // smoothing: two well-separated bands so cluster membership is
        // unambiguous (k-means means divide by cluster size, which rounds;
        // a wide gap keeps that rounding irrelevant)
        let values: Vec<f64> = (0..pixels)
            .map(|i| {
                if i < 2 {
                    // force both bands nonempty
                    i as f64
                } else if rng::next_f64(&mut rng) < 0.5 {
                    uniform_index(&mut rng, 65) as f64 / 256.0
                } else {
                    1.0 - uniform_index(&mut rng, 65) as f64 / 256.0
                }
            })
            .collect();
        let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let img = GrayImage::new(width * nu, height * nu, values).unwrap();
        let img_mapped = GrayImage::new(width * nu, height * nu, mapped).unwrap();
        assert_eq!(
            binarize_smooth(&img, nu).unwrap(),
            binarize_smooth(&img_mapped, nu).unwrap(),
            "case {case}: smoothing not affine-invariant (a={a}, b={b})"
        );
    }
}

/// Small fast session: 3 users, 4x4 pattern at 1:1 (8 bright cells), nu=2,
/// 640 measurements — comfortably oversampled.
pub fn base_session(seed: u64) -> SessionConfig {
    let mut cfg = SessionConfig::new(3, 4, 4, 2, 640);
    cfg.ratio = Some(Ratio::new(1, 1).unwrap());
    cfg.seed = seed;
    cfg
}

/// A spread of configurations hitting every code path worth replaying:
/// both binarization methods, both split modes, every attack kind, length
/// truncation, dark indexing, and a noisy center-weighted profile.
pub fn replay_configs() -> Vec<SessionConfig> {
    let mut configs = Vec::new();

    let clean = base_session(11);
    configs.push(clean.clone());

    let mut sorting = base_session(12);
    sorting.method = MethodChoice::Sorting;
    sorting.split = SplitMode::Balanced;
    configs.push(sorting);

    for (i, &kind) in ALL_ATTACK_KINDS.iter().enumerate() {
        let mut attacked = base_session(20 + i as u64);
        attacked.method = MethodChoice::Sorting;
        let mut spec = AttackSpec::new(kind);
        spec.fraction = 0.4;
        spec.target_user = i % 3;
        spec.seed = 90 + i as u64;
        attacked.attack = Some(spec);
        configs.push(attacked);
    }

    let mut truncating = base_session(30);
    truncating.truncate_on_length_mismatch = true;
    truncating.attack = Some(AttackSpec {
        kind: AttackKind::Discard,
        fraction: 0.05,
        target_user: 1,
        seed: 31,
    });
    configs.push(truncating);

    let mut noisy = base_session(40);
    noisy.noise_sigma = 0.02;
    noisy.noise_floor = 0.5;
    noisy.profile = SourceProfile::Center { strength: 1.5 };
    noisy.key_indexing = KeyIndexing::Dark;
    configs.push(noisy);

    configs
}

/// Running the same configuration twice yields transcripts that are equal
/// as values and byte-identical as JSON.
pub fn check_replay_determinism() {
    for (i, cfg) in replay_configs().iter().enumerate() {
        let first = run_session(cfg).unwrap();
        let second = run_session(cfg).unwrap();
        assert_eq!(first, second, "config {i}: transcripts differ as values");
        assert_eq!(
            first.to_json().unwrap(),
            second.to_json().unwrap(),
            "config {i}: JSON serializations differ"
        );
    }
}

/// Every transcript's message log keeps bucket broadcasts on the public
/// channel and everything else private.
pub fn check_channel_audit() {
    for (i, cfg) in replay_configs().iter().enumerate() {
        let transcript = run_session(cfg).unwrap();
        audit_channel_discipline(&transcript.messages)
            .unwrap_or_else(|e| panic!("config {i}: channel discipline violated: {e}"));
    }
}

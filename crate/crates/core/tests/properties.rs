//! Randomized properties of the public library surface: lossless file
//! round-trips, metric invariances, and optimality of the closed-form
//! solvers against sampled alternatives.

use nalgebra::DMatrix;
use proptest::collection::vec as prop_vec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use despeaker::{
    alignment_residual, compute_eer, cosine_score_sets, fit_pca, load_embedding_set,
    load_pca_model, load_rotation, pair_by_utterance, rotation_for_seed, save_embedding_set,
    save_pca_model, save_rotation, sinkhorn_transport, solve_procrustes, top1_speaker_accuracy,
    transform_pca, EmbeddingSet, ExtractorTag, Gender, Rotation, ScoreSet, ScoringMode,
    TrialScore,
};

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Wraps a matrix as a set with `speakers` round-robin speaker ids and
/// alternating genders.
fn set_from_matrix(m: DMatrix<f64>, speakers: usize) -> EmbeddingSet {
    let n = m.nrows();
    EmbeddingSet::new(
        m,
        (0..n).map(|i| format!("u{i:04}")).collect(),
        (0..n).map(|i| format!("s{:02}", i % speakers)).collect(),
        (0..n)
            .map(|i| {
                if (i % speakers).is_multiple_of(2) {
                    Gender::Female
                } else {
                    Gender::Male
                }
            })
            .collect(),
        ExtractorTag::Original,
    )
    .unwrap()
}

fn gaussian_set(seed: u64, rows: usize, cols: usize, speakers: usize) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    set_from_matrix(gaussian_matrix(&mut rng, rows, cols), speakers)
}

/// An arbitrary embedding set built from raw proptest values, including the
/// degenerate shapes proptest likes (zeros, single rows, single columns).
fn arb_embedding_set() -> impl Strategy<Value = EmbeddingSet> {
    (1usize..20, 1usize..5, 1usize..4, any::<bool>()).prop_flat_map(|(n, d, speakers, retrained)| {
        prop_vec(-50.0f64..50.0, n * d).prop_map(move |values| {
            let tag = if retrained {
                ExtractorTag::Retrained
            } else {
                ExtractorTag::Original
            };
            let m = DMatrix::from_row_slice(n, d, &values);
            let mut set = set_from_matrix(m, speakers);
            if tag == ExtractorTag::Retrained {
                set = EmbeddingSet::new(
                    set.vectors().clone(),
                    set.utterance_ids().to_vec(),
                    set.speaker_ids().to_vec(),
                    set.genders().to_vec(),
                    tag,
                )
                .unwrap();
            }
            set
        })
    })
}

/// Scores on a coarse grid, so that affine maps cannot collapse distinct
/// values, with both trial classes guaranteed present.
fn arb_score_set() -> impl Strategy<Value = ScoreSet> {
    prop_vec((-1000i32..1000, any::<bool>()), 2..200).prop_map(|raw| {
        let mut scores: Vec<TrialScore> = raw
            .iter()
            .enumerate()
            .map(|(i, &(q, is_target))| TrialScore {
                trial_utterance_id: format!("t{i}"),
                enroll_speaker_id: format!("e{}", i % 7),
                score: f64::from(q) / 250.0,
                is_target,
            })
            .collect();
        scores[0].is_target = true;
        scores[1].is_target = false;
        ScoreSet::new(scores).unwrap()
    })
}

proptest! {
    #[test]
    fn embedding_file_round_trip_is_identity(set in arb_embedding_set()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.txt");
        save_embedding_set(&set, &path).unwrap();
        let loaded = load_embedding_set(&path).unwrap();
        prop_assert_eq!(set, loaded);
    }

    #[test]
    fn rotation_file_round_trip_is_identity(dim in 1usize..10, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rotation.txt");
        let rotation = Rotation::new(
            rotation_for_seed(dim, seed).unwrap(),
            format!("test(seed={seed})"),
        )
        .unwrap();
        save_rotation(&rotation, &path).unwrap();
        let loaded = load_rotation(&path).unwrap();
        prop_assert_eq!(rotation.matrix(), loaded.matrix());
        prop_assert_eq!(rotation.provenance(), loaded.provenance());
    }

    #[test]
    fn pca_file_round_trip_is_identity(
        seed in any::<u64>(),
        n in 4usize..30,
        d in 2usize..6,
        k_raw in 1usize..6,
    ) {
        let k = k_raw.min(d).min(n);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.txt");
        let model = fit_pca(&gaussian_set(seed, n, d, 3), k).unwrap();
        save_pca_model(&model, &path).unwrap();
        let loaded = load_pca_model(&path).unwrap();
        prop_assert_eq!(model, loaded);
    }

    #[test]
    fn eer_is_invariant_under_increasing_affine_maps(
        scores in arb_score_set(),
        scale_q in 1u32..80,
        offset_q in -500i32..500,
    ) {
        let scale = f64::from(scale_q) / 10.0;
        let offset = f64::from(offset_q) / 100.0;
        let baseline = compute_eer(&scores).unwrap();
        let mapped = ScoreSet::new(
            scores
                .scores()
                .iter()
                .map(|s| TrialScore { score: scale * s.score + offset, ..s.clone() })
                .collect(),
        )
        .unwrap();
        let transformed = compute_eer(&mapped).unwrap();
        prop_assert!((baseline - transformed).abs() <= 1e-12,
            "eer changed under affine map: {baseline} vs {transformed}");
    }

    #[test]
    fn eer_is_invariant_under_score_order(scores in arb_score_set(), seed in any::<u64>()) {
        let baseline = compute_eer(&scores).unwrap();
        let mut shuffled = scores.scores().to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let reordered = compute_eer(&ScoreSet::new(shuffled).unwrap()).unwrap();
        prop_assert_eq!(baseline, reordered);
    }

    #[test]
    fn eer_stays_in_unit_interval(scores in arb_score_set()) {
        let eer = compute_eer(&scores).unwrap();
        prop_assert!((0.0..=1.0).contains(&eer), "eer {eer} out of range");
    }

    #[test]
    fn procrustes_beats_sampled_orthogonal_maps(
        seed in any::<u64>(),
        n in 6usize..25,
        d in 2usize..5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = set_from_matrix(gaussian_matrix(&mut rng, n, d), 3);
        let target = source
            .with_vectors(gaussian_matrix(&mut rng, n, d))
            .unwrap();
        let paired = pair_by_utterance(&source, &target).unwrap();
        let best = solve_procrustes(&paired).unwrap();
        let best_residual = alignment_residual(&paired, &best).unwrap();
        for alt_seed in 0..20u64 {
            let alt = Rotation::new(
                rotation_for_seed(d, seed.wrapping_add(alt_seed)).unwrap(),
                "sampled",
            )
            .unwrap();
            let alt_residual = alignment_residual(&paired, &alt).unwrap();
            prop_assert!(
                best_residual <= alt_residual + 1e-9,
                "sampled rotation beat the solver: {best_residual} vs {alt_residual}"
            );
        }
    }

    #[test]
    fn procrustes_recovers_a_planted_rotation(
        seed in any::<u64>(),
        n in 8usize..30,
        d in 2usize..6,
    ) {
        let source = gaussian_set(seed, n, d, 3);
        let planted = rotation_for_seed(d, seed ^ 0xabcd).unwrap();
        let target = source.with_vectors(source.vectors() * &planted).unwrap();
        let fitted = solve_procrustes(&pair_by_utterance(&source, &target).unwrap()).unwrap();
        let max_err = (fitted.matrix() - &planted)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(max_err <= 1e-8, "recovery error {max_err}");
    }

    #[test]
    fn rotation_apply_then_inverse_is_identity(
        seed in any::<u64>(),
        n in 1usize..20,
        d in 1usize..8,
    ) {
        let set = gaussian_set(seed, n, d, 2);
        let rotation = Rotation::new(
            rotation_for_seed(d, seed ^ 0x77).unwrap(),
            "test",
        )
        .unwrap();
        let round_tripped = despeaker::apply_inverse_rotation(
            &despeaker::apply_rotation(&set, &rotation).unwrap(),
            &rotation,
        )
        .unwrap();
        let max_err = (round_tripped.vectors() - set.vectors())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(max_err <= 1e-10, "round trip error {max_err}");
    }

    #[test]
    fn full_rank_pca_is_an_isometry(seed in any::<u64>(), n in 8usize..40, d in 2usize..6) {
        let set = gaussian_set(seed, n, d, 3);
        let model = fit_pca(&set, d).unwrap();
        let projected = transform_pca(&set, &model).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                let before = (set.vectors().row(i) - set.vectors().row(j)).norm();
                let after = (projected.vectors().row(i) - projected.vectors().row(j)).norm();
                prop_assert!(
                    (before - after).abs() <= 1e-8 * before.max(1.0),
                    "distance {before} became {after}"
                );
            }
        }
    }

    #[test]
    fn pca_ratios_are_sorted_and_centered(
        seed in any::<u64>(),
        n in 6usize..40,
        d in 2usize..6,
        k_raw in 1usize..6,
    ) {
        let k = k_raw.min(d);
        let set = gaussian_set(seed, n, d, 3);
        let model = fit_pca(&set, k).unwrap();
        let ratios = model.explained_variance_ratio();
        let mut sum = 0.0;
        for i in 0..k {
            prop_assert!(ratios[i] >= 0.0);
            if i > 0 {
                prop_assert!(ratios[i] <= ratios[i - 1] + 1e-12);
            }
            sum += ratios[i];
        }
        prop_assert!(sum <= 1.0 + 1e-9, "ratios sum to {sum}");

        let projected = transform_pca(&set, &model).unwrap();
        for c in 0..k {
            let mean = projected.vectors().column(c).sum() / n as f64;
            prop_assert!(mean.abs() <= 1e-9, "projected column {c} has mean {mean}");
        }
    }

    #[test]
    fn top1_is_invariant_under_joint_orthogonal_maps(
        seed in any::<u64>(),
        n_rec in 2usize..20,
        n_ref in 2usize..20,
        d in 2usize..6,
    ) {
        let reconstructed = gaussian_set(seed, n_rec, d, 3);
        let reference = gaussian_set(seed ^ 0x51, n_ref, d, 3);
        let baseline = top1_speaker_accuracy(&reconstructed, &reference).unwrap();
        let rotation = Rotation::new(
            rotation_for_seed(d, seed ^ 0x52).unwrap(),
            "test",
        )
        .unwrap();
        let mapped = top1_speaker_accuracy(
            &despeaker::apply_rotation(&reconstructed, &rotation).unwrap(),
            &despeaker::apply_rotation(&reference, &rotation).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(baseline, mapped);
    }

    #[test]
    fn normalization_preserves_cosine_eer(seed in any::<u64>()) {
        let trials = gaussian_set(seed, 24, 4, 4);
        let enroll = gaussian_set(seed ^ 0x9e, 12, 4, 4);
        let baseline = compute_eer(
            &cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap(),
        )
        .unwrap();
        let normalized = compute_eer(
            &cosine_score_sets(
                &trials.length_normalized().unwrap(),
                &enroll,
                ScoringMode::SpeakerModel,
            )
            .unwrap(),
        )
        .unwrap();
        prop_assert!(
            (baseline - normalized).abs() <= 1e-9,
            "eer changed under normalization: {baseline} vs {normalized}"
        );
    }

    #[test]
    fn per_utterance_scores_match_manual_cosine(seed in any::<u64>()) {
        let trials = gaussian_set(seed, 6, 3, 2);
        let enroll = gaussian_set(seed ^ 0x31, 5, 3, 2);
        let scores = cosine_score_sets(&trials, &enroll, ScoringMode::PerUtterance).unwrap();
        prop_assert_eq!(scores.len(), trials.len() * enroll.len());
        for s in scores.scores() {
            let t = trials
                .utterance_ids()
                .iter()
                .position(|id| *id == s.trial_utterance_id)
                .unwrap();
            let matches: Vec<usize> = (0..enroll.len())
                .filter(|&e| enroll.speaker_ids()[e] == s.enroll_speaker_id)
                .collect();
            let mut found = false;
            for e in matches {
                let a = trials.vectors().row(t);
                let b = enroll.vectors().row(e);
                let manual = a.dot(&b) / (a.norm() * b.norm());
                if (manual - s.score).abs() <= 1e-12 {
                    found = true;
                }
            }
            prop_assert!(found, "no enrollment row reproduces score {}", s.score);
            prop_assert_eq!(
                s.is_target,
                trials.speaker_ids()[t] == s.enroll_speaker_id
            );
        }
    }

    #[test]
    fn sinkhorn_marginals_are_uniform(
        seed in any::<u64>(),
        n in 1usize..9,
        m in 1usize..9,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost = DMatrix::from_fn(n, m, |_, _| {
            rng.sample::<f64, _>(StandardNormal).abs()
        });
        let plan = sinkhorn_transport(&cost, 1.0, 500).unwrap();
        prop_assert!(
            plan.max_marginal_error() <= 1e-6,
            "marginal error {}",
            plan.max_marginal_error()
        );
    }

    #[test]
    fn hardened_plans_are_permutations(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost = DMatrix::from_fn(n, n, |_, _| {
            rng.sample::<f64, _>(StandardNormal).abs()
        });
        let plan = sinkhorn_transport(&cost, 0.5, 300).unwrap();
        let assignment = despeaker::harden_plan(&plan).unwrap();
        let mut seen = assignment.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let again = despeaker::harden_plan(&plan).unwrap();
        prop_assert_eq!(assignment, again);
    }
}

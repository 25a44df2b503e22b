//! Linkability (EER) and invertibility (Top-1 re-identification) metrics,
//! plus the per-scenario report row they feed.

use std::fmt;

use crate::data::{EmbeddingSet, ExtractorTag};
use crate::error::{Error, Result};

/// How trials are scored against the enrollment set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoringMode {
    /// Score against per-speaker mean vectors (speaker models).
    #[default]
    SpeakerModel,
    /// Score against every enrollment utterance individually.
    PerUtterance,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringMode::SpeakerModel => write!(f, "speaker_model"),
            ScoringMode::PerUtterance => write!(f, "per_utterance"),
        }
    }
}

impl std::str::FromStr for ScoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speaker_model" => Ok(ScoringMode::SpeakerModel),
            "per_utterance" => Ok(ScoringMode::PerUtterance),
            other => Err(Error::InvalidInput(format!(
                "unknown scoring mode '{other}', expected speaker_model or per_utterance"
            ))),
        }
    }
}

/// One trial-versus-enrollment score.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScore {
    pub trial_utterance_id: String,
    pub enroll_speaker_id: String,
    pub score: f64,
    pub is_target: bool,
}

/// A collection of trial scores ready for EER computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    scores: Vec<TrialScore>,
}

impl ScoreSet {
    /// Wraps raw scores; every score must be finite.
    pub fn new(scores: Vec<TrialScore>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| !s.score.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite score for trial '{}'",
                bad.trial_utterance_id
            )));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[TrialScore] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn target_count(&self) -> usize {
        self.scores.iter().filter(|s| s.is_target).count()
    }

    pub fn non_target_count(&self) -> usize {
        self.len() - self.target_count()
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Scores every trial row against the enrollment set with cosine similarity.
/// In `SpeakerModel` mode each enrollment speaker is represented by the mean
/// of their rows; in `PerUtterance` mode every enrollment row is scored
/// individually. A score is a target iff the speaker ids match.
pub fn cosine_score_sets(
    trials: &EmbeddingSet,
    enroll: &EmbeddingSet,
    mode: ScoringMode,
) -> Result<ScoreSet> {
    if trials.dim() != enroll.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trials dimension {} vs enroll dimension {}",
            trials.dim(),
            enroll.dim()
        )));
    }
    let d = trials.dim();

    let models: Vec<(String, Vec<f64>)> = match mode {
        ScoringMode::SpeakerModel => enroll
            .speaker_groups()
            .into_iter()
            .map(|(speaker, rows)| {
                let mut mean = vec![0.0; d];
                for &r in &rows {
                    for (c, entry) in mean.iter_mut().enumerate() {
                        *entry += enroll.vectors()[(r, c)];
                    }
                }
                for v in &mut mean {
                    *v /= rows.len() as f64;
                }
                if mean.iter().all(|&v| v == 0.0) {
                    return Err(Error::ZeroNorm {
                        id: format!("enroll speaker model '{speaker}'"),
                    });
                }
                Ok((speaker, mean))
            })
            .collect::<Result<_>>()?,
        ScoringMode::PerUtterance => (0..enroll.len())
            .map(|r| {
                let row: Vec<f64> = (0..d).map(|c| enroll.vectors()[(r, c)]).collect();
                if row.iter().all(|&v| v == 0.0) {
                    return Err(Error::ZeroNorm {
                        id: enroll.utterance_ids()[r].clone(),
                    });
                }
                Ok((enroll.speaker_ids()[r].clone(), row))
            })
            .collect::<Result<_>>()?,
    };

    let mut scores = Vec::with_capacity(trials.len() * models.len());
    for t in 0..trials.len() {
        let row: Vec<f64> = (0..d).map(|c| trials.vectors()[(t, c)]).collect();
        if row.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroNorm {
                id: trials.utterance_ids()[t].clone(),
            });
        }
        for (speaker, model) in &models {
            scores.push(TrialScore {
                trial_utterance_id: trials.utterance_ids()[t].clone(),
                enroll_speaker_id: speaker.clone(),
                score: cosine(&row, model),
                is_target: &trials.speaker_ids()[t] == speaker,
            });
        }
    }
    ScoreSet::new(scores)
}

/// Computes the equal error rate: the operating point where the false
/// acceptance rate (non-targets scoring at or above the threshold) equals
/// the false rejection rate (targets scoring below it). The threshold sweep
/// visits every unique score ascending; the exact crossing is linearly
/// interpolated between the two bracketing operating points.
pub fn compute_eer(scores: &ScoreSet) -> Result<f64> {
    let mut targets: Vec<f64> = Vec::new();
    let mut non_targets: Vec<f64> = Vec::new();
    for s in scores.scores() {
        if s.is_target {
            targets.push(s.score);
        } else {
            non_targets.push(s.score);
        }
    }
    if targets.is_empty() || non_targets.is_empty() {
        return Err(Error::DegenerateScores);
    }
    targets.sort_by(f64::total_cmp);
    non_targets.sort_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = targets.iter().chain(&non_targets).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let nt = targets.len() as f64;
    let nn = non_targets.len() as f64;
    // Index of the first element >= threshold in a sorted slice.
    let lower_bound = |sorted: &[f64], threshold: f64| -> usize {
        sorted.partition_point(|&v| v < threshold)
    };

    // At the lowest threshold FRR = 0 and FAR = 1, so the sweep starts
    // strictly above the crossing.
    let mut prev_far = 1.0;
    let mut prev_frr = 0.0;
    for &theta in &thresholds {
        let frr = lower_bound(&targets, theta) as f64 / nt;
        let far = (non_targets.len() - lower_bound(&non_targets, theta)) as f64 / nn;
        let diff = far - frr;
        if diff <= 0.0 {
            return Ok(interpolate_crossing(prev_far, prev_frr, far, frr));
        }
        prev_far = far;
        prev_frr = frr;
    }
    // No crossing among the sampled thresholds: bracket against the virtual
    // end point above every score, where FAR = 0 and FRR = 1.
    Ok(interpolate_crossing(prev_far, prev_frr, 0.0, 1.0))
}

/// Linear interpolation of the FAR = FRR crossing between two operating
/// points, the first with FAR > FRR and the second with FAR <= FRR.
fn interpolate_crossing(far1: f64, frr1: f64, far2: f64, frr2: f64) -> f64 {
    let diff1 = far1 - frr1;
    let diff2 = far2 - frr2;
    if diff1 == diff2 {
        return (far1 + frr1) / 2.0;
    }
    let t = diff1 / (diff1 - diff2);
    frr1 + t * (frr2 - frr1)
}

/// For each reconstructed row, finds the euclidean-nearest reference row
/// (ties broken by lowest reference index) and reports the fraction whose
/// nearest reference shares the speaker id.
pub fn top1_speaker_accuracy(
    reconstructed: &EmbeddingSet,
    reference: &EmbeddingSet,
) -> Result<f64> {
    if reconstructed.dim() != reference.dim() {
        return Err(Error::DimensionMismatch(format!(
            "reconstructed dimension {} vs reference dimension {}",
            reconstructed.dim(),
            reference.dim()
        )));
    }
    if reference.is_empty() {
        return Err(Error::InvalidInput(
            "reference set is empty: no neighbors to search".into(),
        ));
    }
    if reconstructed.is_empty() {
        return Err(Error::InvalidInput(
            "reconstructed set is empty: accuracy undefined".into(),
        ));
    }
    let d = reconstructed.dim();
    let mut hits = 0usize;
    for i in 0..reconstructed.len() {
        let mut best_index = 0usize;
        let mut best_distance = f64::INFINITY;
        for j in 0..reference.len() {
            let mut distance = 0.0;
            for c in 0..d {
                let delta = reconstructed.vectors()[(i, c)] - reference.vectors()[(j, c)];
                distance += delta * delta;
            }
            if distance < best_distance {
                best_distance = distance;
                best_index = j;
            }
        }
        if reconstructed.speaker_ids()[i] == reference.speaker_ids()[best_index] {
            hits += 1;
        }
    }
    Ok(hits as f64 / reconstructed.len() as f64)
}

/// One row of the results table: a scenario with its variation flags and
/// the four per-gender metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub scenario_name: String,
    pub gender_dependent: bool,
    pub pca_k: Option<usize>,
    pub extractor_tag: ExtractorTag,
    pub scoring: ScoringMode,
    pub eer_f: f64,
    pub eer_m: f64,
    pub top1_f: f64,
    pub top1_m: f64,
}

impl AttackReport {
    /// Checks the metric-range invariant.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("eer_f", self.eer_f),
            ("eer_m", self.eer_m),
            ("top1_f", self.top1_f),
            ("top1_m", self.top1_m),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidInput(format!(
                    "{name} = {value} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Column header shared by all report TSVs.
    pub fn tsv_header() -> &'static str {
        "scenario\tgender_dependent\tpca\textractor\teer_f\teer_m\ttop1_f\ttop1_m"
    }

    /// One TSV row; metrics rendered to 4 decimal places, the pca column as
    /// the component count or "-".
    pub fn to_tsv_row(&self) -> String {
        let pca = match self.pca_k {
            Some(k) => k.to_string(),
            None => "-".to_string(),
        };
        format!(
            "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            self.scenario_name,
            self.gender_dependent,
            pca,
            self.extractor_tag,
            self.eer_f,
            self.eer_m,
            self.top1_f,
            self.top1_m
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EmbeddingSet, Gender};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labeled_set(rows: Vec<(&str, &str, Gender, Vec<f64>)>) -> EmbeddingSet {
        let n = rows.len();
        let d = rows[0].3.len();
        let mut values = Vec::with_capacity(n * d);
        for row in &rows {
            values.extend_from_slice(&row.3);
        }
        EmbeddingSet::new(
            DMatrix::from_row_slice(n, d, &values),
            rows.iter().map(|r| r.0.to_string()).collect(),
            rows.iter().map(|r| r.1.to_string()).collect(),
            rows.iter().map(|r| r.2).collect(),
            ExtractorTag::Original,
        )
        .unwrap()
    }

    fn score_set(targets: &[f64], non_targets: &[f64]) -> ScoreSet {
        let mut scores = Vec::new();
        for (i, &s) in targets.iter().enumerate() {
            scores.push(TrialScore {
                trial_utterance_id: format!("t{i}"),
                enroll_speaker_id: "spk".into(),
                score: s,
                is_target: true,
            });
        }
        for (i, &s) in non_targets.iter().enumerate() {
            scores.push(TrialScore {
                trial_utterance_id: format!("n{i}"),
                enroll_speaker_id: "spk".into(),
                score: s,
                is_target: false,
            });
        }
        ScoreSet::new(scores).unwrap()
    }

    #[test]
    fn cosine_of_identical_vector_is_one() {
        let enroll = labeled_set(vec![("e1", "a", Gender::Female, vec![0.3, 0.4])]);
        let trials = labeled_set(vec![("t1", "a", Gender::Female, vec![0.3, 0.4])]);
        let scores = cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap();
        assert_eq!(scores.len(), 1);
        assert!((scores.scores()[0].score - 1.0).abs() < 1e-12);
        assert!(scores.scores()[0].is_target);
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        let enroll = labeled_set(vec![("e1", "a", Gender::Female, vec![1.0, 0.0])]);
        let trials = labeled_set(vec![("t1", "b", Gender::Female, vec![0.0, 2.0])]);
        let scores = cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap();
        assert!(scores.scores()[0].score.abs() < 1e-12);
        assert!(!scores.scores()[0].is_target);
    }

    #[test]
    fn speaker_model_scores_match_hand_computation() {
        let enroll = labeled_set(vec![
            ("e1", "a", Gender::Female, vec![1.0, 0.0]),
            ("e2", "a", Gender::Female, vec![0.0, 1.0]),
            ("e3", "b", Gender::Male, vec![-1.0, 0.0]),
        ]);
        let trials = labeled_set(vec![
            ("t1", "a", Gender::Female, vec![2.0, 0.0]),
            ("t2", "b", Gender::Male, vec![0.0, -3.0]),
            ("t3", "c", Gender::Female, vec![1.0, 1.0]),
        ]);
        let scores = cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap();
        assert_eq!(scores.len(), 6);
        // Speaker a model = (0.5, 0.5), speaker b model = (-1, 0).
        let lookup = |utt: &str, spk: &str| -> f64 {
            scores
                .scores()
                .iter()
                .find(|s| s.trial_utterance_id == utt && s.enroll_speaker_id == spk)
                .unwrap()
                .score
        };
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((lookup("t1", "a") - inv_sqrt2).abs() < 1e-12);
        assert!((lookup("t1", "b") - -1.0).abs() < 1e-12);
        assert!((lookup("t2", "a") - -inv_sqrt2).abs() < 1e-12);
        assert!((lookup("t2", "b") - 0.0).abs() < 1e-12);
        assert!((lookup("t3", "a") - 1.0).abs() < 1e-12);
        assert!((lookup("t3", "b") - -inv_sqrt2).abs() < 1e-12);
        let targets = scores.scores().iter().filter(|s| s.is_target).count();
        assert_eq!(targets, 2);
    }

    #[test]
    fn per_utterance_mode_scores_every_enroll_row() {
        let enroll = labeled_set(vec![
            ("e1", "a", Gender::Female, vec![1.0, 0.0]),
            ("e2", "a", Gender::Female, vec![0.0, 1.0]),
        ]);
        let trials = labeled_set(vec![("t1", "a", Gender::Female, vec![1.0, 0.0])]);
        let scores = cosine_score_sets(&trials, &enroll, ScoringMode::PerUtterance).unwrap();
        assert_eq!(scores.len(), 2);
        assert!(scores.scores().iter().all(|s| s.is_target));
    }

    #[test]
    fn zero_norm_vectors_are_named() {
        let enroll = labeled_set(vec![("e1", "a", Gender::Female, vec![0.0, 0.0])]);
        let trials = labeled_set(vec![("t1", "a", Gender::Female, vec![1.0, 0.0])]);
        let err = cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap_err();
        assert!(err.to_string().contains("enroll speaker model 'a'"), "{err}");

        let enroll = labeled_set(vec![("e1", "a", Gender::Female, vec![1.0, 0.0])]);
        let trials = labeled_set(vec![("bad_trial", "a", Gender::Female, vec![0.0, 0.0])]);
        let err = cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap_err();
        assert!(err.to_string().contains("bad_trial"), "{err}");

        // Opposed rows cancel: the mean is the zero vector.
        let enroll = labeled_set(vec![
            ("e1", "a", Gender::Female, vec![1.0, 0.0]),
            ("e2", "a", Gender::Female, vec![-1.0, 0.0]),
        ]);
        let trials = labeled_set(vec![("t1", "a", Gender::Female, vec![1.0, 0.0])]);
        let err = cosine_score_sets(&trials, &enroll, ScoringMode::SpeakerModel).unwrap_err();
        assert!(err.to_string().contains("enroll speaker model"), "{err}");
    }

    #[test]
    fn eer_is_zero_for_perfect_separation() {
        let scores = score_set(&[0.9, 0.9, 0.9], &[0.1, 0.1]);
        assert!(compute_eer(&scores).unwrap().abs() < 1e-12);
    }

    #[test]
    fn eer_is_half_for_identical_distributions() {
        let scores = score_set(&[0.2, 0.5, 0.8], &[0.2, 0.5, 0.8]);
        assert!((compute_eer(&scores).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eer_is_one_half_at_single_shared_score() {
        let scores = score_set(&[0.5], &[0.5]);
        assert!((compute_eer(&scores).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eer_interpolates_between_plateau_points() {
        // Thresholds at 0.5 give (FAR, FRR) = (1, 0); at 0.7 give (0.5, 1).
        // The crossing interpolates to 2/3.
        let scores = score_set(&[0.5], &[0.5, 0.7]);
        let eer = compute_eer(&scores).unwrap();
        assert!((eer - 2.0 / 3.0).abs() < 1e-12, "eer = {eer}");
    }

    #[test]
    fn eer_handles_total_inversion() {
        // Targets all score below non-targets: the system is anti-correlated
        // and the rate crossing sits at 1.
        let scores = score_set(&[0.1, 0.2], &[0.8, 0.9]);
        let eer = compute_eer(&scores).unwrap();
        assert!((eer - 1.0).abs() < 1e-12, "eer = {eer}");
    }

    #[test]
    fn eer_requires_both_score_kinds() {
        let only_targets = score_set(&[0.5, 0.7], &[]);
        assert!(matches!(
            compute_eer(&only_targets),
            Err(Error::DegenerateScores)
        ));
        let only_non_targets = score_set(&[], &[0.5]);
        assert!(matches!(
            compute_eer(&only_non_targets),
            Err(Error::DegenerateScores)
        ));
    }

    #[test]
    fn eer_is_invariant_under_strictly_increasing_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let targets: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() * 2.0 - 0.5).collect();
            let non_targets: Vec<f64> = (0..70).map(|_| rng.gen::<f64>() - 0.5).collect();
            let base = compute_eer(&score_set(&targets, &non_targets)).unwrap();
            let warp = |v: f64| (3.0 * v).tanh() + v / 10.0;
            let warped_t: Vec<f64> = targets.iter().map(|&v| warp(v)).collect();
            let warped_n: Vec<f64> = non_targets.iter().map(|&v| warp(v)).collect();
            let warped = compute_eer(&score_set(&warped_t, &warped_n)).unwrap();
            assert!(
                (base - warped).abs() < 1e-12,
                "eer changed under monotone transform: {base} vs {warped}"
            );
        }
    }

    #[test]
    fn eer_is_symmetric_under_score_negation_with_label_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let targets: Vec<f64> = (0..25).map(|_| rng.gen::<f64>() + 0.2).collect();
            let non_targets: Vec<f64> = (0..60).map(|_| rng.gen::<f64>()).collect();
            let base = compute_eer(&score_set(&targets, &non_targets)).unwrap();
            let negated_t: Vec<f64> = non_targets.iter().map(|&v| -v).collect();
            let negated_n: Vec<f64> = targets.iter().map(|&v| -v).collect();
            let mirrored = compute_eer(&score_set(&negated_t, &negated_n)).unwrap();
            assert!(
                (base - mirrored).abs() < 1e-9,
                "mirror symmetry violated: {base} vs {mirrored}"
            );
        }
    }

    #[test]
    fn label_swap_alone_gives_the_complementary_rate() {
        let scores = score_set(&[0.9, 0.8], &[0.1, 0.2]);
        let swapped = score_set(&[0.1, 0.2], &[0.9, 0.8]);
        let eer = compute_eer(&scores).unwrap();
        let eer_swapped = compute_eer(&swapped).unwrap();
        assert!((eer - 0.0).abs() < 1e-12);
        assert!(((1.0 - eer) - eer_swapped).abs() < 1e-12);
    }

    #[test]
    fn top1_of_identical_sets_is_one() {
        let set = labeled_set(vec![
            ("u1", "a", Gender::Female, vec![1.0, 0.0]),
            ("u2", "b", Gender::Male, vec![0.0, 1.0]),
            ("u3", "a", Gender::Female, vec![0.9, 0.1]),
        ]);
        let accuracy = top1_speaker_accuracy(&set, &set).unwrap();
        assert_eq!(accuracy, 1.0);
    }

    #[test]
    fn top1_is_zero_for_adversarial_placement() {
        let reference = labeled_set(vec![
            ("r1", "a", Gender::Female, vec![0.0, 0.0]),
            ("r2", "b", Gender::Male, vec![10.0, 0.0]),
        ]);
        let reconstructed = labeled_set(vec![
            ("x1", "a", Gender::Female, vec![9.5, 0.0]),
            ("x2", "b", Gender::Male, vec![0.5, 0.0]),
        ]);
        let accuracy = top1_speaker_accuracy(&reconstructed, &reference).unwrap();
        assert_eq!(accuracy, 0.0);
    }

    #[test]
    fn top1_ties_break_to_the_lowest_reference_index() {
        // Two references equidistant from the query; the first wins, and its
        // speaker decides the outcome.
        let reference = labeled_set(vec![
            ("r1", "a", Gender::Female, vec![1.0, 0.0]),
            ("r2", "b", Gender::Male, vec![-1.0, 0.0]),
        ]);
        let query_a = labeled_set(vec![("q", "a", Gender::Female, vec![0.0, 0.0])]);
        assert_eq!(top1_speaker_accuracy(&query_a, &reference).unwrap(), 1.0);
        let query_b = labeled_set(vec![("q", "b", Gender::Male, vec![0.0, 0.0])]);
        assert_eq!(top1_speaker_accuracy(&query_b, &reference).unwrap(), 0.0);
    }

    #[test]
    fn top1_rejects_mismatched_or_empty_inputs() {
        let a = labeled_set(vec![("u1", "a", Gender::Female, vec![1.0, 0.0])]);
        let b = labeled_set(vec![("u1", "a", Gender::Female, vec![1.0, 0.0, 0.0])]);
        assert!(matches!(
            top1_speaker_accuracy(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn report_serializes_to_fixed_width_tsv() {
        let report = AttackReport {
            scenario_name: "procrustes".into(),
            gender_dependent: true,
            pca_k: Some(70),
            extractor_tag: ExtractorTag::Original,
            scoring: ScoringMode::SpeakerModel,
            eer_f: 0.254,
            eer_m: 0.24444,
            top1_f: 0.598,
            top1_m: 0.6,
        };
        report.validate().unwrap();
        assert_eq!(
            AttackReport::tsv_header(),
            "scenario\tgender_dependent\tpca\textractor\teer_f\teer_m\ttop1_f\ttop1_m"
        );
        assert_eq!(
            report.to_tsv_row(),
            "procrustes\ttrue\t70\toriginal\t0.2540\t0.2444\t0.5980\t0.6000"
        );

        let no_pca = AttackReport {
            pca_k: None,
            extractor_tag: ExtractorTag::Retrained,
            ..report
        };
        assert!(no_pca.to_tsv_row().contains("\t-\tretrained\t"));
    }

    #[test]
    fn report_validation_rejects_out_of_range_metrics() {
        let report = AttackReport {
            scenario_name: "x".into(),
            gender_dependent: false,
            pca_k: None,
            extractor_tag: ExtractorTag::Original,
            scoring: ScoringMode::SpeakerModel,
            eer_f: 1.2,
            eer_m: 0.2,
            top1_f: 0.5,
            top1_m: 0.5,
        };
        assert!(report.validate().is_err());
    }
}

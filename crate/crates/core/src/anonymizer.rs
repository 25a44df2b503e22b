//! Synthetic data generation and embedding-space anonymization: populations
//! of speaker clusters, a pool-based anonymizer that replaces each speaker
//! with a blend of distant pool vectors, and a rotation anonymizer used as
//! ground truth for alignment experiments.

use nalgebra::{DMatrix, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{EmbeddingSet, ExtractorTag, Gender};
use crate::error::{Error, Result};

/// A bank of candidate vectors the anonymizer draws replacement identities
/// from. Rows are vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct XvectorPool {
    vectors: DMatrix<f64>,
}

impl XvectorPool {
    /// Validates that the pool is non-empty and finite.
    pub fn new(vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(Error::InvalidInput("pool must be non-empty".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("pool entries must be finite".into()));
        }
        Ok(Self { vectors })
    }

    /// Builds a pool from the vectors of an embedding set.
    pub fn from_set(set: &EmbeddingSet) -> Result<Self> {
        Self::new(set.vectors().clone())
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Distance used to rank pool vectors against a speaker's mean voice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolDistance {
    #[default]
    Cosine,
    Euclidean,
}

impl std::fmt::Display for PoolDistance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoolDistance::Cosine => write!(f, "cosine"),
            PoolDistance::Euclidean => write!(f, "euclidean"),
        }
    }
}

impl std::str::FromStr for PoolDistance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(PoolDistance::Cosine),
            "euclidean" => Ok(PoolDistance::Euclidean),
            other => Err(Error::InvalidInput(format!(
                "unknown distance '{other}', expected cosine or euclidean"
            ))),
        }
    }
}

/// Anonymizer knobs. `noise_sigma` of `None` selects a data-driven value:
/// 0.05 times the pooled within-speaker standard deviation of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonymizerParams {
    pub pool_select: usize,
    pub random_pick: usize,
    pub distance: PoolDistance,
    pub noise_sigma: Option<f64>,
    pub per_utterance_targets: bool,
    pub seed: u64,
}

impl Default for AnonymizerParams {
    fn default() -> Self {
        Self {
            pool_select: 200,
            random_pick: 100,
            distance: PoolDistance::Cosine,
            noise_sigma: None,
            per_utterance_targets: false,
            seed: 0,
        }
    }
}

impl AnonymizerParams {
    /// Checks the selection counts against the pool size.
    pub fn validate(&self, pool_size: usize) -> Result<()> {
        if self.random_pick == 0 {
            return Err(Error::InvalidInput("random_pick must be at least 1".into()));
        }
        if self.random_pick > self.pool_select {
            return Err(Error::InvalidInput(format!(
                "random_pick {} exceeds pool_select {}",
                self.random_pick, self.pool_select
            )));
        }
        if self.pool_select > pool_size {
            return Err(Error::InvalidInput(format!(
                "pool_select {} exceeds pool size {}",
                self.pool_select, pool_size
            )));
        }
        if let Some(sigma) = self.noise_sigma {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::InvalidInput(
                    "noise_sigma must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }
}

/// 64-bit FNV-1a over the speaker id, used to derive a per-speaker RNG
/// substream so each speaker's anonymization is independent of set order.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &byte in bytes {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn speaker_rng(seed: u64, speaker_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(speaker_id.as_bytes()))
}

/// Indices of the `count` pool vectors furthest from `reference`, ordered by
/// decreasing distance with ties broken toward the lower index.
pub fn select_furthest(
    pool: &XvectorPool,
    reference: &[f64],
    count: usize,
    distance: PoolDistance,
) -> Result<Vec<usize>> {
    if reference.len() != pool.dim() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} values, pool vectors have {}",
            reference.len(),
            pool.dim()
        )));
    }
    if count == 0 || count > pool.len() {
        return Err(Error::InvalidInput(format!(
            "cannot select {} vectors from a pool of {}",
            count,
            pool.len()
        )));
    }
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("reference must be finite".into()));
    }

    let ref_norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if distance == PoolDistance::Cosine && ref_norm == 0.0 {
        return Err(Error::ZeroNorm {
            id: "selection reference".into(),
        });
    }

    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(pool.len());
    for i in 0..pool.len() {
        let row = pool.vectors().row(i);
        let d = match distance {
            PoolDistance::Cosine => {
                let row_norm = row.norm();
                if row_norm == 0.0 {
                    return Err(Error::ZeroNorm {
                        id: format!("pool vector {i}"),
                    });
                }
                let dot: f64 = row.iter().zip(reference).map(|(a, b)| a * b).sum();
                1.0 - dot / (row_norm * ref_norm)
            }
            PoolDistance::Euclidean => row
                .iter()
                .zip(reference)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        };
        scored.push((i, d));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(count).map(|(i, _)| i).collect())
}

/// Pooled within-speaker standard deviation per coordinate: the root of the
/// summed squared deviations from each speaker's mean, divided by
/// `(rows - speakers) * dim`. Zero when every speaker has one utterance.
pub fn within_speaker_sigma(set: &EmbeddingSet) -> f64 {
    let groups = set.speaker_groups();
    let n = set.len();
    let s = groups.len();
    if n <= s {
        return 0.0;
    }
    let d = set.dim();
    let mut total = 0.0;
    for (_, indices) in &groups {
        let mean = mean_row(set.vectors(), indices);
        for &i in indices {
            total += (set.vectors().row(i) - &mean).norm_squared();
        }
    }
    (total / ((n - s) as f64 * d as f64)).sqrt()
}

fn mean_row(vectors: &DMatrix<f64>, indices: &[usize]) -> RowDVector<f64> {
    let mut mean = RowDVector::zeros(vectors.ncols());
    for &i in indices {
        mean += vectors.row(i);
    }
    mean /= indices.len() as f64;
    mean
}

fn gaussian_row(rng: &mut ChaCha8Rng, dim: usize) -> RowDVector<f64> {
    RowDVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn picked_mean(
    pool: &XvectorPool,
    furthest: &[usize],
    pick: usize,
    rng: &mut ChaCha8Rng,
) -> RowDVector<f64> {
    let chosen = rand::seq::index::sample(rng, furthest.len(), pick).into_vec();
    let mut target = RowDVector::zeros(pool.dim());
    for local in chosen {
        target += pool.vectors().row(furthest[local]);
    }
    target /= pick as f64;
    target
}

/// Replaces every utterance vector with a pseudo-identity built from the
/// pool: for each speaker, rank the pool by distance from the speaker's
/// mean, keep the `pool_select` furthest, average a random `random_pick` of
/// them, and add per-utterance gaussian noise. Each speaker consumes an
/// independent RNG substream keyed by its id, so results do not depend on
/// which other speakers share the set. With `per_utterance_targets`, the
/// random pick is redrawn for every utterance instead of once per speaker.
pub fn anonymize_set(
    set: &EmbeddingSet,
    pool: &XvectorPool,
    params: &AnonymizerParams,
) -> Result<EmbeddingSet> {
    params.validate(pool.len())?;
    if set.dim() != pool.dim() {
        return Err(Error::DimensionMismatch(format!(
            "set dimension {} vs pool dimension {}",
            set.dim(),
            pool.dim()
        )));
    }
    if set.is_empty() {
        return Ok(set.clone());
    }

    let sigma = match params.noise_sigma {
        Some(value) => value,
        None => 0.05 * within_speaker_sigma(set),
    };

    let d = set.dim();
    let mut output = DMatrix::zeros(set.len(), d);
    for (speaker_id, indices) in set.speaker_groups() {
        let mut rng = speaker_rng(params.seed, &speaker_id);
        let mean = mean_row(set.vectors(), &indices);
        let furthest = select_furthest(pool, mean.as_slice(), params.pool_select, params.distance)?;
        let shared_target = if params.per_utterance_targets {
            None
        } else {
            Some(picked_mean(pool, &furthest, params.random_pick, &mut rng))
        };
        for &i in &indices {
            let target = match &shared_target {
                Some(t) => t.clone(),
                None => picked_mean(pool, &furthest, params.random_pick, &mut rng),
            };
            let row = target + gaussian_row(&mut rng, d) * sigma;
            output.row_mut(i).copy_from(&row);
        }
    }
    set.with_vectors(output)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn haar_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for j in 0..dim {
        if r_diag[j] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// The orthogonal matrix `rotate_anonymize_set` applies for a given seed
/// and dimension, exposed so experiments can compare a recovered rotation
/// against the planted one.
pub fn rotation_for_seed(dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(haar_orthogonal(&mut rng, dim))
}

/// Anonymizes by a seeded random orthogonal rotation plus per-utterance
/// gaussian noise. This is the idealized anonymizer whose ground-truth
/// rotation is known exactly, via [`rotation_for_seed`].
pub fn rotate_anonymize_set(
    set: &EmbeddingSet,
    noise_sigma: f64,
    seed: u64,
) -> Result<EmbeddingSet> {
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::InvalidInput(
            "noise_sigma must be finite and nonnegative".into(),
        ));
    }
    if set.is_empty() {
        return Ok(set.clone());
    }
    let d = set.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = haar_orthogonal(&mut rng, d);
    let mut rotated = set.vectors() * &q;
    if noise_sigma > 0.0 {
        for i in 0..rotated.nrows() {
            let noise = gaussian_row(&mut rng, d) * noise_sigma;
            let mut row = rotated.row_mut(i);
            row += noise;
        }
    }
    set.with_vectors(rotated)
}

/// Draws a synthetic population: each speaker is a gaussian cluster whose
/// center has standard deviation `spread` per coordinate and whose
/// utterances scatter around it with standard deviation `within`. Speaker
/// ids are `s0000, s0001, ...`; utterance ids append `u000, u001, ...`;
/// genders alternate by speaker index.
pub fn generate_population(
    num_speakers: usize,
    utterances_per_speaker: usize,
    dim: usize,
    spread: f64,
    within: f64,
    seed: u64,
) -> Result<EmbeddingSet> {
    if num_speakers == 0 || utterances_per_speaker == 0 || dim == 0 {
        return Err(Error::InvalidInput(
            "speaker count, utterance count, and dimension must be at least 1".into(),
        ));
    }
    if spread <= 0.0 || !spread.is_finite() || within <= 0.0 || !within.is_finite() {
        return Err(Error::InvalidInput(
            "spread and within must be positive and finite".into(),
        ));
    }

    let n = num_speakers * utterances_per_speaker;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = DMatrix::zeros(n, dim);
    let mut utterance_ids = Vec::with_capacity(n);
    let mut speaker_ids = Vec::with_capacity(n);
    let mut genders = Vec::with_capacity(n);
    for s in 0..num_speakers {
        let center = gaussian_row(&mut rng, dim) * spread;
        let gender = if s % 2 == 0 { Gender::Female } else { Gender::Male };
        for u in 0..utterances_per_speaker {
            let row = &center + gaussian_row(&mut rng, dim) * within;
            let index = s * utterances_per_speaker + u;
            vectors.row_mut(index).copy_from(&row);
            utterance_ids.push(format!("s{s:04}u{u:03}"));
            speaker_ids.push(format!("s{s:04}"));
            genders.push(gender);
        }
    }
    EmbeddingSet::new(
        vectors,
        utterance_ids,
        speaker_ids,
        genders,
        ExtractorTag::Original,
    )
}

/// Shape of a synthetic enrollment/trial split drawn from one population.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSplitParams {
    pub num_speakers: usize,
    pub enroll_speakers: usize,
    pub enroll_utterances: usize,
    pub trial_utterances: usize,
    pub dim: usize,
    pub spread: f64,
    pub within: f64,
    pub seed: u64,
}

impl EvaluationSplitParams {
    pub fn validate(&self) -> Result<()> {
        if self.enroll_speakers == 0 || self.enroll_speakers > self.num_speakers {
            return Err(Error::InvalidInput(format!(
                "enroll_speakers {} must be between 1 and num_speakers {}",
                self.enroll_speakers, self.num_speakers
            )));
        }
        if self.enroll_utterances == 0 || self.trial_utterances == 0 {
            return Err(Error::InvalidInput(
                "enroll_utterances and trial_utterances must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Generates one population and splits it into an enrollment set (the first
/// `enroll_speakers` speakers, first `enroll_utterances` utterances each)
/// and a trial set (all speakers, the remaining `trial_utterances`
/// utterances each). Trials from non-enrolled speakers provide non-target
/// comparisons against every enrolled model.
pub fn generate_evaluation_split(
    params: &EvaluationSplitParams,
) -> Result<(EmbeddingSet, EmbeddingSet)> {
    params.validate()?;
    let per_speaker = params.enroll_utterances + params.trial_utterances;
    let population = generate_population(
        params.num_speakers,
        per_speaker,
        params.dim,
        params.spread,
        params.within,
        params.seed,
    )?;
    let mut enroll_indices = Vec::new();
    let mut trial_indices = Vec::new();
    for s in 0..params.num_speakers {
        for u in 0..per_speaker {
            let index = s * per_speaker + u;
            if u < params.enroll_utterances {
                if s < params.enroll_speakers {
                    enroll_indices.push(index);
                }
            } else {
                trial_indices.push(index);
            }
        }
    }
    let enroll = population.subset(&enroll_indices)?;
    let trials = population.subset(&trial_indices)?;
    Ok((enroll, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::pair_by_utterance;
    use crate::procrustes::solve_procrustes;

    fn small_population() -> EmbeddingSet {
        generate_population(6, 4, 8, 1.0, 0.1, 11).unwrap()
    }

    #[test]
    fn fnv1a64_matches_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn population_has_expected_ids_genders_and_shape() {
        let set = small_population();
        assert_eq!(set.len(), 24);
        assert_eq!(set.dim(), 8);
        assert_eq!(set.utterance_ids()[0], "s0000u000");
        assert_eq!(set.utterance_ids()[5], "s0001u001");
        assert_eq!(set.speaker_ids()[23], "s0005");
        assert_eq!(set.genders()[0], Gender::Female);
        assert_eq!(set.genders()[4], Gender::Male);
        let again = generate_population(6, 4, 8, 1.0, 0.1, 11).unwrap();
        assert_eq!(set.vectors(), again.vectors());
        let other_seed = generate_population(6, 4, 8, 1.0, 0.1, 12).unwrap();
        assert_ne!(set.vectors(), other_seed.vectors());
    }

    #[test]
    fn population_rejects_bad_parameters() {
        assert!(generate_population(0, 4, 8, 1.0, 0.1, 0).is_err());
        assert!(generate_population(4, 0, 8, 1.0, 0.1, 0).is_err());
        assert!(generate_population(4, 4, 0, 1.0, 0.1, 0).is_err());
        assert!(generate_population(4, 4, 8, 0.0, 0.1, 0).is_err());
        assert!(generate_population(4, 4, 8, 1.0, -0.1, 0).is_err());
    }

    #[test]
    fn furthest_selection_matches_a_full_scan() {
        let pool_set = generate_population(10, 2, 5, 1.0, 0.3, 21).unwrap();
        let pool = XvectorPool::from_set(&pool_set).unwrap();
        let reference: Vec<f64> = (0..5).map(|i| 0.2 * i as f64 + 0.1).collect();
        for distance in [PoolDistance::Cosine, PoolDistance::Euclidean] {
            let selected = select_furthest(&pool, &reference, 7, distance).unwrap();
            let mut scan: Vec<(usize, f64)> = (0..pool.len())
                .map(|i| {
                    let row = pool.vectors().row(i);
                    let d = match distance {
                        PoolDistance::Cosine => {
                            let dot: f64 =
                                row.iter().zip(&reference).map(|(a, b)| a * b).sum();
                            1.0 - dot
                                / (row.norm()
                                    * reference.iter().map(|v| v * v).sum::<f64>().sqrt())
                        }
                        PoolDistance::Euclidean => (0..5)
                            .map(|c| (row[c] - reference[c]).powi(2))
                            .sum::<f64>()
                            .sqrt(),
                    };
                    (i, d)
                })
                .collect();
            scan.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let expected: Vec<usize> = scan.into_iter().take(7).map(|(i, _)| i).collect();
            assert_eq!(selected, expected, "{distance}");
        }
    }

    #[test]
    fn furthest_selection_breaks_ties_by_index() {
        let matrix = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let pool = XvectorPool::new(matrix).unwrap();
        let selected = select_furthest(&pool, &[1.0, 0.0], 2, PoolDistance::Cosine).unwrap();
        assert_eq!(selected, vec![1, 2]);
    }

    #[test]
    fn cosine_selection_rejects_zero_norm_vectors() {
        let pool = XvectorPool::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            select_furthest(&pool, &[1.0, 0.0], 1, PoolDistance::Cosine),
            Err(Error::ZeroNorm { .. })
        ));
        assert!(matches!(
            select_furthest(&pool, &[0.0, 0.0], 1, PoolDistance::Cosine),
            Err(Error::ZeroNorm { .. })
        ));
        assert!(select_furthest(&pool, &[0.0, 0.0], 1, PoolDistance::Euclidean).is_ok());
    }

    #[test]
    fn within_speaker_sigma_matches_hand_computation() {
        let vectors = DMatrix::from_row_slice(
            4,
            2,
            &[0.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 5.0],
        );
        let set = EmbeddingSet::new(
            vectors,
            vec!["u1".into(), "u2".into(), "u3".into(), "u4".into()],
            vec!["a".into(), "a".into(), "b".into(), "b".into()],
            vec![Gender::Female; 4],
            ExtractorTag::Original,
        )
        .unwrap();
        // Deviations: speaker a contributes 1 + 1, speaker b contributes
        // 1 + 1; divided by (4 - 2) * 2 = 4 and rooted: exactly 1.
        assert!((within_speaker_sigma(&set) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_is_zero_with_one_utterance_per_speaker() {
        let set = generate_population(5, 1, 4, 1.0, 0.2, 3).unwrap();
        assert_eq!(within_speaker_sigma(&set), 0.0);
    }

    #[test]
    fn anonymization_is_deterministic() {
        let set = small_population();
        let pool_set = generate_population(60, 1, 8, 1.0, 0.2, 99).unwrap();
        let pool = XvectorPool::from_set(&pool_set).unwrap();
        let params = AnonymizerParams {
            pool_select: 20,
            random_pick: 10,
            seed: 5,
            ..AnonymizerParams::default()
        };
        let a = anonymize_set(&set, &pool, &params).unwrap();
        let b = anonymize_set(&set, &pool, &params).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        assert_eq!(a.utterance_ids(), set.utterance_ids());
        assert_eq!(a.speaker_ids(), set.speaker_ids());

        let other = AnonymizerParams { seed: 6, ..params };
        let c = anonymize_set(&set, &pool, &other).unwrap();
        assert_ne!(a.vectors(), c.vectors());
    }

    #[test]
    fn noiseless_speaker_targets_are_shared_within_a_speaker() {
        let set = small_population();
        let pool_set = generate_population(60, 1, 8, 1.0, 0.2, 99).unwrap();
        let pool = XvectorPool::from_set(&pool_set).unwrap();
        let params = AnonymizerParams {
            pool_select: 20,
            random_pick: 10,
            noise_sigma: Some(0.0),
            ..AnonymizerParams::default()
        };
        let anon = anonymize_set(&set, &pool, &params).unwrap();
        for (_, indices) in anon.speaker_groups() {
            let first = anon.vectors().row(indices[0]);
            for &i in &indices[1..] {
                assert_eq!(anon.vectors().row(i), first);
            }
        }
        let (first_speaker, second_speaker) =
            (anon.vectors().row(0), anon.vectors().row(4));
        assert_ne!(first_speaker, second_speaker);
    }

    #[test]
    fn per_utterance_targets_differ_within_a_speaker() {
        let set = small_population();
        let pool_set = generate_population(60, 1, 8, 1.0, 0.2, 99).unwrap();
        let pool = XvectorPool::from_set(&pool_set).unwrap();
        let params = AnonymizerParams {
            pool_select: 20,
            random_pick: 10,
            noise_sigma: Some(0.0),
            per_utterance_targets: true,
            ..AnonymizerParams::default()
        };
        let anon = anonymize_set(&set, &pool, &params).unwrap();
        let (_, indices) = &anon.speaker_groups()[0];
        assert_ne!(anon.vectors().row(indices[0]), anon.vectors().row(indices[1]));
    }

    #[test]
    fn speaker_streams_do_not_depend_on_set_composition() {
        let set = small_population();
        let pool_set = generate_population(60, 1, 8, 1.0, 0.2, 99).unwrap();
        let pool = XvectorPool::from_set(&pool_set).unwrap();
        // Fixed sigma: the automatic estimate is pooled over the whole set
        // and would legitimately change when speakers are dropped.
        let params = AnonymizerParams {
            pool_select: 20,
            random_pick: 10,
            noise_sigma: Some(0.02),
            seed: 5,
            ..AnonymizerParams::default()
        };
        let full = anonymize_set(&set, &pool, &params).unwrap();
        // Keep only the last two speakers and re-anonymize: rows for the
        // surviving utterances must be identical.
        let keep: Vec<usize> = (16..24).collect();
        let reduced = set.subset(&keep).unwrap();
        let reduced_anon = anonymize_set(&reduced, &pool, &params).unwrap();
        for (local, &global) in keep.iter().enumerate() {
            assert_eq!(reduced_anon.vectors().row(local), full.vectors().row(global));
        }
    }

    #[test]
    fn full_pool_pick_collapses_to_the_pool_mean() {
        let set = small_population();
        let pool_set = generate_population(12, 1, 8, 1.0, 0.2, 99).unwrap();
        let pool = XvectorPool::from_set(&pool_set).unwrap();
        let params = AnonymizerParams {
            pool_select: 12,
            random_pick: 12,
            noise_sigma: Some(0.0),
            ..AnonymizerParams::default()
        };
        let anon = anonymize_set(&set, &pool, &params).unwrap();
        let indices: Vec<usize> = (0..pool.len()).collect();
        let pool_mean = mean_row(pool.vectors(), &indices);
        for i in 0..anon.len() {
            assert!((anon.vectors().row(i) - &pool_mean).norm() < 1e-12);
        }
    }

    #[test]
    fn params_validation_rejects_inconsistent_counts() {
        let params = AnonymizerParams {
            random_pick: 0,
            ..AnonymizerParams::default()
        };
        assert!(params.validate(300).is_err());
        let params = AnonymizerParams {
            pool_select: 10,
            random_pick: 11,
            ..AnonymizerParams::default()
        };
        assert!(params.validate(300).is_err());
        let params = AnonymizerParams::default();
        assert!(params.validate(100).is_err());
        assert!(params.validate(200).is_ok());
        let params = AnonymizerParams {
            noise_sigma: Some(-1.0),
            ..AnonymizerParams::default()
        };
        assert!(params.validate(300).is_err());
    }

    #[test]
    fn rotation_for_seed_reproduces_the_applied_rotation() {
        let set = small_population();
        let rotated = rotate_anonymize_set(&set, 0.0, 77).unwrap();
        let q = rotation_for_seed(8, 77).unwrap();
        let expected = set.vectors() * &q;
        let max_delta = (rotated.vectors() - expected)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(max_delta <= 1e-15);
        let orth = crate::procrustes::orthogonality_error(&q);
        assert!(orth <= 1e-12, "orthogonality error {orth}");
    }

    #[test]
    fn planted_rotation_is_recovered_by_the_supervised_solver() {
        let set = generate_population(10, 5, 12, 1.0, 0.1, 41).unwrap();
        let rotated = rotate_anonymize_set(&set, 0.0, 42).unwrap();
        let paired = pair_by_utterance(&set, &rotated).unwrap();
        let rotation = solve_procrustes(&paired).unwrap();
        let truth = rotation_for_seed(12, 42).unwrap();
        assert!((rotation.matrix() - truth).norm() < 1e-10);

        let noisy = rotate_anonymize_set(&set, 0.01, 42).unwrap();
        let paired = pair_by_utterance(&set, &noisy).unwrap();
        let rotation = solve_procrustes(&paired).unwrap();
        let truth = rotation_for_seed(12, 42).unwrap();
        assert!((rotation.matrix() - truth).norm() < 0.05);
    }

    #[test]
    fn rotate_anonymize_rejects_bad_sigma() {
        let set = small_population();
        assert!(rotate_anonymize_set(&set, -1.0, 0).is_err());
        assert!(rotate_anonymize_set(&set, f64::NAN, 0).is_err());
    }

    #[test]
    fn evaluation_split_partitions_utterances() {
        let params = EvaluationSplitParams {
            num_speakers: 8,
            enroll_speakers: 5,
            enroll_utterances: 3,
            trial_utterances: 2,
            dim: 6,
            spread: 1.0,
            within: 0.1,
            seed: 17,
        };
        let (enroll, trials) = generate_evaluation_split(&params).unwrap();
        assert_eq!(enroll.len(), 15);
        assert_eq!(trials.len(), 16);
        let enroll_speakers: std::collections::BTreeSet<_> =
            enroll.speaker_ids().iter().collect();
        let trial_speakers: std::collections::BTreeSet<_> =
            trials.speaker_ids().iter().collect();
        assert_eq!(enroll_speakers.len(), 5);
        assert_eq!(trial_speakers.len(), 8);
        assert!(enroll_speakers.is_subset(&trial_speakers));
        for id in enroll.utterance_ids() {
            assert!(!trials.utterance_ids().contains(id));
        }
        // Same-speaker cluster centers are shared across the split.
        let enroll_mean = mean_row(enroll.vectors(), &[0, 1, 2]);
        let trial_mean = mean_row(trials.vectors(), &[0, 1]);
        assert!((enroll_mean - trial_mean).norm() < 0.5);
    }

    #[test]
    fn evaluation_split_rejects_bad_counts() {
        let params = EvaluationSplitParams {
            num_speakers: 4,
            enroll_speakers: 5,
            enroll_utterances: 3,
            trial_utterances: 2,
            dim: 6,
            spread: 1.0,
            within: 0.1,
            seed: 17,
        };
        assert!(generate_evaluation_split(&params).is_err());
    }
}

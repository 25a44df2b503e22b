//! Shared data builders for the criterion benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use despeaker::{EmbeddingSet, ExtractorTag, Gender};

/// A gaussian embedding set with `speakers` round-robin speaker ids and
/// alternating genders.
pub fn gaussian_set(seed: u64, rows: usize, cols: usize, speakers: usize) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    EmbeddingSet::new(
        vectors,
        (0..rows).map(|i| format!("u{i:05}")).collect(),
        (0..rows).map(|i| format!("s{:04}", i % speakers)).collect(),
        (0..rows)
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
    .expect("valid synthetic set")
}

/// A random cost matrix with entries in (0, 1).
pub fn random_cost(seed: u64, n: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0) + 1e-9)
}

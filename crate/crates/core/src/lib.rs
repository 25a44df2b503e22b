//! De-anonymization toolkit for speaker embeddings.
//!
//! Many embedding-space anonymizers approximately preserve pairwise
//! geometry, which makes them vulnerable to alignment attacks: an attacker
//! who holds clear embeddings of some speakers can fit a rotation mapping
//! clear space to anonymized space and then undo the anonymization of other
//! utterances. This crate implements both sides of that experiment:
//!
//! - data model and text formats for labeled embedding sets ([`data`]),
//! - supervised alignment via the orthogonal Procrustes solution
//!   ([`procrustes`]),
//! - unsupervised alignment via entropic optimal transport alternating with
//!   Procrustes updates ([`wasserstein`]),
//! - PCA pre-alignment of the two spaces ([`pca`]),
//! - linkability (EER) and re-identification (Top-1) metrics ([`metrics`]),
//! - synthetic populations and reference anonymizers ([`anonymizer`]),
//! - a scenario runner and suite file format gluing it together
//!   ([`scenario`]).
//!
//! All randomized components take explicit seeds and produce identical
//! results across runs on the same platform.

pub mod anonymizer;
pub mod data;
pub mod error;
pub mod metrics;
pub mod pca;
pub mod procrustes;
pub mod scenario;
pub mod wasserstein;

pub use anonymizer::{
    anonymize_set, generate_evaluation_split, generate_population, rotate_anonymize_set,
    rotation_for_seed, select_furthest, within_speaker_sigma, AnonymizerParams,
    EvaluationSplitParams, PoolDistance, XvectorPool,
};
pub use data::{
    load_embedding_set, pair_by_utterance, save_embedding_set, split_by_gender, EmbeddingSet,
    ExtractorTag, Gender, PairedSets,
};
pub use error::{Error, Result};
pub use metrics::{
    compute_eer, cosine_score_sets, top1_speaker_accuracy, AttackReport, ScoreSet, ScoringMode,
    TrialScore,
};
pub use pca::{
    explained_variance_check, fit_pca, load_pca_model, save_pca_model, transform_pca, PcaModel,
};
pub use procrustes::{
    alignment_residual, apply_inverse_rotation, apply_rotation, load_rotation,
    orthogonality_error, save_rotation, solve_procrustes, Rotation, ORTHOGONALITY_TOL,
};
pub use scenario::{
    fit_scenario_rotation, load_scenario_inputs, parse_suite_file, run_scenario, run_suite,
    Algorithm, ScenarioInputs, ScenarioOutcome, ScenarioPaths, ScenarioSpec, Suite, SuiteEntry,
    SuiteRun,
};
pub use wasserstein::{
    harden_plan, matching_accuracy, sinkhorn_transport, solve_wasserstein_procrustes,
    TransportPlan, WpConfig,
};

//! The attack pipeline: fit an alignment between clear and anonymized
//! embeddings, map anonymized trials back toward clear speaker space, and
//! measure linkability (EER) and re-identification (Top-1) per gender.
//! Includes a text suite format for running batches of scenarios.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::data::{
    load_embedding_set, pair_by_utterance, EmbeddingSet, Gender,
};
use crate::error::{Error, Result};
use crate::metrics::{
    compute_eer, cosine_score_sets, top1_speaker_accuracy, AttackReport, ScoringMode,
};
use crate::pca::{fit_pca, transform_pca};
use crate::procrustes::{apply_inverse_rotation, solve_procrustes, Rotation};
use crate::wasserstein::{solve_wasserstein_procrustes, WpConfig};

/// The alignment estimator a scenario uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    /// Supervised: exact orthogonal solution on utterance-paired sets.
    #[default]
    Procrustes,
    /// Unsupervised: joint estimation of matching and rotation.
    WassersteinProcrustes,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Procrustes => write!(f, "procrustes"),
            Algorithm::WassersteinProcrustes => write!(f, "wp"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "procrustes" => Ok(Algorithm::Procrustes),
            "wp" | "wasserstein_procrustes" => Ok(Algorithm::WassersteinProcrustes),
            other => Err(Error::InvalidInput(format!(
                "unknown algorithm '{other}', expected procrustes or wp"
            ))),
        }
    }
}

/// The four embedding sets a scenario consumes. `enroll_anon` may be absent
/// in oracle mode, where the alignment is fitted on the trial pairs
/// themselves (an upper bound on attack strength).
#[derive(Debug, Clone)]
pub struct ScenarioInputs {
    pub enroll: EmbeddingSet,
    pub enroll_anon: Option<EmbeddingSet>,
    pub trials: EmbeddingSet,
    pub trials_anon: EmbeddingSet,
}

/// Configuration of one attack scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub algorithm: Algorithm,
    /// Fit the alignment on the trial pairs instead of the enrollment pairs.
    pub oracle: bool,
    /// Fit one alignment per gender instead of a shared one.
    pub gender_dependent: bool,
    /// Reduce each domain to this many components before aligning.
    pub pca_k: Option<usize>,
    /// Scale every vector to unit norm before anything else.
    pub length_normalize: bool,
    /// Solver settings for the unsupervised algorithm; defaults when absent.
    pub wp_config: Option<WpConfig>,
    pub scoring: ScoringMode,
}

impl ScenarioSpec {
    /// A spec with the given name and every knob at its default.
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            algorithm: Algorithm::default(),
            oracle: false,
            gender_dependent: false,
            pca_k: None,
            length_normalize: false,
            wp_config: None,
            scoring: ScoringMode::default(),
        }
    }
}

fn gender_word(gender: Gender) -> &'static str {
    match gender {
        Gender::Female => "female",
        Gender::Male => "male",
    }
}

fn with_context(context: &str, error: Error) -> Error {
    Error::InvalidInput(format!("{context}: {error}"))
}

fn gender_subset(set: &EmbeddingSet, gender: Gender, role: &str) -> Result<EmbeddingSet> {
    let indices: Vec<usize> = (0..set.len())
        .filter(|&i| set.genders()[i] == gender)
        .collect();
    if indices.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no {} utterances in the {role} set",
            gender_word(gender)
        )));
    }
    set.subset(&indices)
}

/// The reconstructed trials together with the enrollment and clear-trial
/// sets expressed in the same (possibly PCA-reduced) space.
struct ReconstructedTrials {
    reconstructed: EmbeddingSet,
    enroll: EmbeddingSet,
    trials: EmbeddingSet,
    rotation: Rotation,
}

/// Fits the alignment on the scenario's fitting pair and maps the
/// anonymized trials back through it.
fn fit_and_reconstruct(
    spec: &ScenarioSpec,
    enroll: &EmbeddingSet,
    enroll_anon: Option<&EmbeddingSet>,
    trials: &EmbeddingSet,
    trials_anon: &EmbeddingSet,
) -> Result<ReconstructedTrials> {
    let (fit_clear, fit_anon) = if spec.oracle {
        (trials, trials_anon)
    } else {
        let anon = enroll_anon.ok_or_else(|| {
            Error::InvalidInput(
                "an anonymized enrollment set is required unless oracle mode is on".into(),
            )
        })?;
        (enroll, anon)
    };

    let (enroll_s, trials_s, fit_clear_s, fit_anon_s, trials_anon_s) = match spec.pca_k {
        Some(k) => {
            let clear_model = fit_pca(fit_clear, k)
                .map_err(|e| with_context("fitting the clear-side projection", e))?;
            let anon_model = fit_pca(fit_anon, k)
                .map_err(|e| with_context("fitting the anonymized-side projection", e))?;
            (
                transform_pca(enroll, &clear_model)?,
                transform_pca(trials, &clear_model)?,
                transform_pca(fit_clear, &clear_model)?,
                transform_pca(fit_anon, &anon_model)?,
                transform_pca(trials_anon, &anon_model)?,
            )
        }
        None => (
            enroll.clone(),
            trials.clone(),
            fit_clear.clone(),
            fit_anon.clone(),
            trials_anon.clone(),
        ),
    };

    let rotation = match spec.algorithm {
        Algorithm::Procrustes => {
            let paired = pair_by_utterance(&fit_clear_s, &fit_anon_s)?;
            solve_procrustes(&paired)?
        }
        Algorithm::WassersteinProcrustes => {
            let config = spec.wp_config.clone().unwrap_or_default();
            let (rotation, _) =
                solve_wasserstein_procrustes(&fit_clear_s, &fit_anon_s, &config)?;
            rotation
        }
    };

    let reconstructed = apply_inverse_rotation(&trials_anon_s, &rotation)?;
    Ok(ReconstructedTrials {
        reconstructed,
        enroll: enroll_s,
        trials: trials_s,
        rotation,
    })
}

/// EER and Top-1 for one gender, computed on the reconstructed trials
/// against the enrollment models and the clear trials.
fn gender_metrics(
    reconstructed: &EmbeddingSet,
    enroll: &EmbeddingSet,
    trials: &EmbeddingSet,
    gender: Gender,
    scoring: ScoringMode,
) -> Result<(f64, f64)> {
    let word = gender_word(gender);
    let recon_g = gender_subset(reconstructed, gender, "anonymized trial")?;
    let enroll_g = gender_subset(enroll, gender, "enrollment")?;
    let trials_g = gender_subset(trials, gender, "trial")?;
    let scores = cosine_score_sets(&recon_g, &enroll_g, scoring)
        .map_err(|e| with_context(&format!("{word} scoring"), e))?;
    let eer = compute_eer(&scores).map_err(|e| with_context(&format!("{word} EER"), e))?;
    let top1 = top1_speaker_accuracy(&recon_g, &trials_g)
        .map_err(|e| with_context(&format!("{word} re-identification"), e))?;
    Ok((eer, top1))
}

fn check_dimensions(inputs: &ScenarioInputs) -> Result<()> {
    let d = inputs.enroll.dim();
    let mut dims = vec![
        ("enroll", inputs.enroll.dim()),
        ("trials", inputs.trials.dim()),
        ("trials_anon", inputs.trials_anon.dim()),
    ];
    if let Some(anon) = &inputs.enroll_anon {
        dims.push(("enroll_anon", anon.dim()));
    }
    for (role, dim) in dims {
        if dim != d {
            return Err(Error::DimensionMismatch(format!(
                "{role} has dimension {dim}, enroll has {d}"
            )));
        }
    }
    Ok(())
}

/// Runs one scenario: optional length normalization, optional per-gender or
/// shared alignment fitting (with optional PCA pre-alignment in each
/// domain), reconstruction of the anonymized trials, and per-gender EER and
/// Top-1 metrics. All errors are tagged with the scenario name.
pub fn run_scenario(spec: &ScenarioSpec, inputs: &ScenarioInputs) -> Result<AttackReport> {
    run_scenario_inner(spec, inputs).map_err(|e| e.in_scenario(&spec.name))
}

fn run_scenario_inner(spec: &ScenarioSpec, inputs: &ScenarioInputs) -> Result<AttackReport> {
    check_dimensions(inputs)?;
    if let Some(k) = spec.pca_k {
        if k == 0 || k > inputs.enroll.dim() {
            return Err(Error::InvalidInput(format!(
                "pca components {k} must be between 1 and the embedding dimension {}",
                inputs.enroll.dim()
            )));
        }
    }

    let (enroll, enroll_anon, trials, trials_anon) = if spec.length_normalize {
        (
            inputs.enroll.length_normalized()?,
            match &inputs.enroll_anon {
                Some(set) => Some(set.length_normalized()?),
                None => None,
            },
            inputs.trials.length_normalized()?,
            inputs.trials_anon.length_normalized()?,
        )
    } else {
        (
            inputs.enroll.clone(),
            inputs.enroll_anon.clone(),
            inputs.trials.clone(),
            inputs.trials_anon.clone(),
        )
    };

    let (eer_f, top1_f, eer_m, top1_m) = if spec.gender_dependent {
        let mut metrics = Vec::with_capacity(2);
        for gender in [Gender::Female, Gender::Male] {
            let word = gender_word(gender);
            let enroll_g = gender_subset(&enroll, gender, "enrollment")?;
            let enroll_anon_g = match &enroll_anon {
                Some(set) => Some(gender_subset(set, gender, "anonymized enrollment")?),
                None => None,
            };
            let trials_g = gender_subset(&trials, gender, "trial")?;
            let trials_anon_g = gender_subset(&trials_anon, gender, "anonymized trial")?;
            let branch = fit_and_reconstruct(
                spec,
                &enroll_g,
                enroll_anon_g.as_ref(),
                &trials_g,
                &trials_anon_g,
            )
            .map_err(|e| with_context(&format!("{word} branch"), e))?;
            metrics.push(gender_metrics(
                &branch.reconstructed,
                &branch.enroll,
                &branch.trials,
                gender,
                spec.scoring,
            )?);
        }
        (metrics[0].0, metrics[0].1, metrics[1].0, metrics[1].1)
    } else {
        let fitted =
            fit_and_reconstruct(spec, &enroll, enroll_anon.as_ref(), &trials, &trials_anon)?;
        let (eer_f, top1_f) = gender_metrics(
            &fitted.reconstructed,
            &fitted.enroll,
            &fitted.trials,
            Gender::Female,
            spec.scoring,
        )?;
        let (eer_m, top1_m) = gender_metrics(
            &fitted.reconstructed,
            &fitted.enroll,
            &fitted.trials,
            Gender::Male,
            spec.scoring,
        )?;
        (eer_f, top1_f, eer_m, top1_m)
    };

    let report = AttackReport {
        scenario_name: spec.name.clone(),
        gender_dependent: spec.gender_dependent,
        pca_k: spec.pca_k,
        extractor_tag: inputs.trials_anon.extractor_tag(),
        scoring: spec.scoring,
        eer_f,
        eer_m,
        top1_f,
        top1_m,
    };
    report.validate()?;
    Ok(report)
}

/// Recovers the rotation a scenario would fit, without computing metrics.
/// Useful for persisting the alignment itself.
pub fn fit_scenario_rotation(spec: &ScenarioSpec, inputs: &ScenarioInputs) -> Result<Rotation> {
    check_dimensions(inputs).map_err(|e| e.in_scenario(&spec.name))?;
    let fitted = fit_and_reconstruct(
        spec,
        &inputs.enroll,
        inputs.enroll_anon.as_ref(),
        &inputs.trials,
        &inputs.trials_anon,
    )
    .map_err(|e| e.in_scenario(&spec.name))?;
    Ok(fitted.rotation)
}

/// Locations of the four embedding files backing a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioPaths {
    pub enroll: PathBuf,
    pub enroll_anon: Option<PathBuf>,
    pub trials: PathBuf,
    pub trials_anon: PathBuf,
}

/// Loads the scenario's embedding files.
pub fn load_scenario_inputs(paths: &ScenarioPaths) -> Result<ScenarioInputs> {
    Ok(ScenarioInputs {
        enroll: load_embedding_set(&paths.enroll)?,
        enroll_anon: match &paths.enroll_anon {
            Some(path) => Some(load_embedding_set(path)?),
            None => None,
        },
        trials: load_embedding_set(&paths.trials)?,
        trials_anon: load_embedding_set(&paths.trials_anon)?,
    })
}

/// One scenario in a suite: its configuration and its input files.
#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub spec: ScenarioSpec,
    pub paths: ScenarioPaths,
}

/// A parsed suite file: scenarios plus an optional default output path.
#[derive(Debug, Clone)]
pub struct Suite {
    pub default_output: Option<PathBuf>,
    pub entries: Vec<SuiteEntry>,
}

/// Result of running one suite scenario.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub name: String,
    pub result: Result<AttackReport>,
}

/// Results of a whole suite run, in suite order.
#[derive(Debug)]
pub struct SuiteRun {
    pub outcomes: Vec<ScenarioOutcome>,
}

impl SuiteRun {
    pub fn all_succeeded(&self) -> bool {
        self.outcomes.iter().all(|o| o.result.is_ok())
    }

    /// Renders the results table: the report columns plus a final error
    /// column holding "-" for successes and the error message for failures.
    pub fn tsv(&self) -> String {
        let mut out = String::from(AttackReport::tsv_header());
        out.push_str("\terror\n");
        for outcome in &self.outcomes {
            match &outcome.result {
                Ok(report) => {
                    out.push_str(&report.to_tsv_row());
                    out.push_str("\t-\n");
                }
                Err(error) => {
                    let message = error.to_string().replace(['\t', '\n'], " ");
                    out.push_str(&outcome.name);
                    out.push_str("\t-\t-\t-\t-\t-\t-\t-\t");
                    out.push_str(&message);
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Runs every scenario in the suite, continuing past failures. Each
/// outcome carries either the report or the error for its scenario.
pub fn run_suite(suite: &Suite) -> SuiteRun {
    let outcomes = suite
        .entries
        .iter()
        .map(|entry| {
            let result = load_scenario_inputs(&entry.paths)
                .map_err(|e| e.in_scenario(&entry.spec.name))
                .and_then(|inputs| run_scenario(&entry.spec, &inputs));
            ScenarioOutcome {
                name: entry.spec.name.clone(),
                result,
            }
        })
        .collect();
    SuiteRun { outcomes }
}

/// Accumulates one scenario section while parsing a suite file.
struct PendingScenario {
    name: String,
    header_line: usize,
    enroll: Option<PathBuf>,
    enroll_anon: Option<PathBuf>,
    trials: Option<PathBuf>,
    trials_anon: Option<PathBuf>,
    algorithm: Option<Algorithm>,
    oracle: Option<bool>,
    gender_dependent: Option<bool>,
    pca: Option<usize>,
    normalize: Option<bool>,
    seed: Option<u64>,
    scoring: Option<ScoringMode>,
    wp_overrides: Vec<(String, String)>,
}

impl PendingScenario {
    fn new(name: String, header_line: usize) -> Self {
        Self {
            name,
            header_line,
            enroll: None,
            enroll_anon: None,
            trials: None,
            trials_anon: None,
            algorithm: None,
            oracle: None,
            gender_dependent: None,
            pca: None,
            normalize: None,
            seed: None,
            scoring: None,
            wp_overrides: Vec::new(),
        }
    }
}

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_bool(value: &str, key: &str, path: &Path, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format_error(
            path,
            line,
            format!("{key} must be true or false, got '{other}'"),
        )),
    }
}

fn parse_count(value: &str, key: &str, path: &Path, line: usize) -> Result<usize> {
    value.parse().map_err(|_| {
        format_error(path, line, format!("{key} must be a positive integer, got '{value}'"))
    })
}

fn apply_wp_override(config: &mut WpConfig, key: &str, value: &str) -> Result<()> {
    let count = |v: &str| -> Result<usize> {
        v.parse()
            .map_err(|_| Error::InvalidInput(format!("{key} must be an integer, got '{v}'")))
    };
    let real = |v: &str| -> Result<f64> {
        v.parse()
            .map_err(|_| Error::InvalidInput(format!("{key} must be a number, got '{v}'")))
    };
    match key {
        "wp.batch_size_initial" => config.batch_size_initial = count(value)?,
        "wp.batch_doublings" => config.batch_doublings = count(value)?,
        "wp.epochs_per_level" => config.epochs_per_level = count(value)?,
        "wp.learning_rate" => config.learning_rate = real(value)?,
        "wp.sinkhorn_epsilon" => config.sinkhorn_epsilon = real(value)?,
        "wp.sinkhorn_iterations" => config.sinkhorn_iterations = count(value)?,
        "wp.init_subset_size" => config.init_subset_size = count(value)?,
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown solver setting '{other}'"
            )))
        }
    }
    Ok(())
}

fn finish_scenario(pending: PendingScenario, base: &Path, path: &Path) -> Result<SuiteEntry> {
    let header = pending.header_line;
    let name = pending.name;
    let require = |field: Option<PathBuf>, key: &str| {
        field.ok_or_else(|| {
            format_error(
                path,
                header,
                format!("scenario '{name}' is missing required key '{key}'"),
            )
        })
    };
    let enroll = require(pending.enroll, "enroll")?;
    let trials = require(pending.trials, "trials")?;
    let trials_anon = require(pending.trials_anon, "trials_anon")?;
    let oracle = pending.oracle.unwrap_or(false);
    if !oracle && pending.enroll_anon.is_none() {
        return Err(format_error(
            path,
            header,
            format!("scenario '{name}' needs enroll_anon unless oracle = true"),
        ));
    }
    let algorithm = pending.algorithm.unwrap_or_default();
    if algorithm == Algorithm::Procrustes && !pending.wp_overrides.is_empty() {
        return Err(format_error(
            path,
            header,
            format!("scenario '{name}' sets wp.* keys but algorithm is procrustes"),
        ));
    }

    let wp_config = if algorithm == Algorithm::WassersteinProcrustes {
        let mut config = WpConfig {
            seed: pending.seed.unwrap_or(0),
            ..WpConfig::default()
        };
        for (key, value) in &pending.wp_overrides {
            apply_wp_override(&mut config, key, value).map_err(|e| {
                format_error(path, header, format!("scenario '{name}': {e}"))
            })?;
        }
        Some(config)
    } else {
        None
    };

    let spec = ScenarioSpec {
        name,
        algorithm,
        oracle,
        gender_dependent: pending.gender_dependent.unwrap_or(false),
        pca_k: pending.pca,
        length_normalize: pending.normalize.unwrap_or(false),
        wp_config,
        scoring: pending.scoring.unwrap_or_default(),
    };
    let paths = ScenarioPaths {
        enroll: base.join(enroll),
        enroll_anon: pending.enroll_anon.map(|p| base.join(p)),
        trials: base.join(trials),
        trials_anon: base.join(trials_anon),
    };
    Ok(SuiteEntry { spec, paths })
}

/// Parses a suite file. The format is line-based: full-line `#` comments,
/// one optional top-level `out = <path>` line, then `[name]` sections each
/// holding `key = value` lines. Recognized section keys: `enroll`,
/// `enroll_anon`, `trials`, `trials_anon` (paths, resolved relative to the
/// suite file), `algorithm` (procrustes or wp), `oracle`,
/// `gender_dependent`, `normalize` (booleans), `pca` (component count),
/// `seed`, `scoring` (speaker_model or per_utterance), and `wp.*` solver
/// overrides. Unknown or duplicate keys are errors.
pub fn parse_suite_file(path: impl AsRef<Path>) -> Result<Suite> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut suite = Suite {
        default_output: None,
        entries: Vec::new(),
    };
    let mut seen_names = BTreeSet::new();
    let mut pending: Option<PendingScenario> = None;

    for (index, raw) in text.lines().enumerate() {
        let lineno = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(format_error(path, lineno, "unterminated scenario header"));
            };
            let name = name.trim();
            if name.is_empty() {
                return Err(format_error(path, lineno, "scenario name cannot be empty"));
            }
            if !seen_names.insert(name.to_string()) {
                return Err(format_error(
                    path,
                    lineno,
                    format!("duplicate scenario name '{name}'"),
                ));
            }
            if let Some(done) = pending.take() {
                suite.entries.push(finish_scenario(done, base, path)?);
            }
            pending = Some(PendingScenario::new(name.to_string(), lineno));
            continue;
        }

        let Some((key, value)) = line.split_once('=') else {
            return Err(format_error(
                path,
                lineno,
                format!("expected 'key = value', got '{line}'"),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(format_error(path, lineno, format!("empty value for '{key}'")));
        }

        let Some(scenario) = pending.as_mut() else {
            if key == "out" {
                if suite.default_output.is_some() {
                    return Err(format_error(path, lineno, "duplicate 'out' line"));
                }
                suite.default_output = Some(base.join(value));
                continue;
            }
            return Err(format_error(
                path,
                lineno,
                format!("key '{key}' before any [scenario] section"),
            ));
        };

        macro_rules! set_once {
            ($field:expr, $parsed:expr) => {{
                if $field.is_some() {
                    return Err(format_error(path, lineno, format!("duplicate key '{key}'")));
                }
                $field = Some($parsed);
            }};
        }

        match key {
            "enroll" => set_once!(scenario.enroll, PathBuf::from(value)),
            "enroll_anon" => set_once!(scenario.enroll_anon, PathBuf::from(value)),
            "trials" => set_once!(scenario.trials, PathBuf::from(value)),
            "trials_anon" => set_once!(scenario.trials_anon, PathBuf::from(value)),
            "algorithm" => set_once!(
                scenario.algorithm,
                value
                    .parse::<Algorithm>()
                    .map_err(|e| format_error(path, lineno, e.to_string()))?
            ),
            "oracle" => set_once!(scenario.oracle, parse_bool(value, key, path, lineno)?),
            "gender_dependent" => set_once!(
                scenario.gender_dependent,
                parse_bool(value, key, path, lineno)?
            ),
            "normalize" => set_once!(scenario.normalize, parse_bool(value, key, path, lineno)?),
            "pca" => set_once!(scenario.pca, parse_count(value, key, path, lineno)?),
            "seed" => set_once!(scenario.seed, value.parse::<u64>().map_err(|_| {
                format_error(path, lineno, format!("seed must be an integer, got '{value}'"))
            })?),
            "scoring" => set_once!(
                scenario.scoring,
                value
                    .parse::<ScoringMode>()
                    .map_err(|e| format_error(path, lineno, e.to_string()))?
            ),
            wp_key if wp_key.starts_with("wp.") => {
                if scenario.wp_overrides.iter().any(|(k, _)| k == wp_key) {
                    return Err(format_error(path, lineno, format!("duplicate key '{key}'")));
                }
                let mut probe = WpConfig::default();
                apply_wp_override(&mut probe, wp_key, value)
                    .map_err(|e| format_error(path, lineno, e.to_string()))?;
                scenario
                    .wp_overrides
                    .push((wp_key.to_string(), value.to_string()));
            }
            other => {
                return Err(format_error(
                    path,
                    lineno,
                    format!("unknown key '{other}'"),
                ));
            }
        }
    }

    if let Some(done) = pending.take() {
        suite.entries.push(finish_scenario(done, base, path)?);
    }
    if suite.entries.is_empty() {
        return Err(format_error(path, 1, "suite defines no scenarios"));
    }
    Ok(suite)
}

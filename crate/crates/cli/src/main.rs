//! Command-line front end for the despeaker library: run attack scenarios
//! against anonymized embedding files, synthesize evaluation data, and
//! score one embedding file against another.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use despeaker::{
    anonymize_set, compute_eer, cosine_score_sets, generate_evaluation_split,
    generate_population, load_embedding_set, parse_suite_file, rotate_anonymize_set, run_suite,
    save_embedding_set, split_by_gender, top1_speaker_accuracy, Algorithm, AnonymizerParams,
    EmbeddingSet, EvaluationSplitParams, PoolDistance, ScenarioPaths, ScenarioSpec, ScoringMode,
    Suite, SuiteEntry, WpConfig, XvectorPool,
};

#[derive(Parser)]
#[command(
    name = "attack",
    version,
    about = "Estimate and invert embedding-space anonymization, and score the result"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run attack scenarios from a suite file, or one scenario from flags
    Run(RunArgs),
    /// Generate synthetic embedding files
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Score a trial embedding file against an enrollment file
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Suite file listing scenarios to run
    #[arg(long, conflicts_with = "scenario")]
    suite: Option<PathBuf>,

    /// Name of a single scenario defined by the flags below
    #[arg(long, required_unless_present = "suite")]
    scenario: Option<String>,

    /// Clear enrollment embeddings
    #[arg(long, required_unless_present = "suite", conflicts_with = "suite")]
    enroll: Option<PathBuf>,

    /// Anonymized enrollment embeddings; required unless --oracle
    #[arg(long, conflicts_with = "suite")]
    enroll_anon: Option<PathBuf>,

    /// Clear trial embeddings
    #[arg(long, required_unless_present = "suite", conflicts_with = "suite")]
    trials: Option<PathBuf>,

    /// Anonymized trial embeddings
    #[arg(long, required_unless_present = "suite", conflicts_with = "suite")]
    trials_anon: Option<PathBuf>,

    /// Alignment estimator
    #[arg(long, default_value_t = Algorithm::Procrustes, conflicts_with = "suite")]
    algorithm: Algorithm,

    /// Fit the alignment on the trial pairs instead of the enrollment pairs
    #[arg(long, conflicts_with = "suite")]
    oracle: bool,

    /// Fit one alignment per gender
    #[arg(long, conflicts_with = "suite")]
    gender_dependent: bool,

    /// Reduce each domain to this many principal components before aligning
    #[arg(long, value_name = "K", conflicts_with = "suite")]
    pca: Option<usize>,

    /// Scale every vector to unit norm before anything else
    #[arg(long, conflicts_with = "suite")]
    normalize: bool,

    /// Seed for the unsupervised solver
    #[arg(long, default_value_t = 0, conflicts_with = "suite")]
    seed: u64,

    /// How trials are scored against enrollment
    #[arg(long, default_value_t = ScoringMode::SpeakerModel, conflicts_with = "suite")]
    scoring: ScoringMode,

    /// Write the results table here instead of stdout; overrides the
    /// suite's own `out` setting
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Draw a population of gaussian speaker clusters
    Population(PopulationArgs),
    /// Draw an enrollment/trial split from one population
    Split(SplitArgs),
    /// Anonymize a set by pool-mean substitution plus noise
    Anonymize(AnonymizeArgs),
    /// Anonymize a set by a seeded random rotation plus noise
    Rotate(RotateArgs),
}

#[derive(Args)]
struct PopulationArgs {
    /// Number of speakers
    #[arg(long)]
    speakers: usize,

    /// Utterances per speaker
    #[arg(long)]
    utterances: usize,

    /// Embedding dimension
    #[arg(long)]
    dim: usize,

    /// Standard deviation of speaker centers per coordinate
    #[arg(long, default_value_t = 1.0)]
    spread: f64,

    /// Standard deviation of utterances around their speaker center
    #[arg(long, default_value_t = 0.1)]
    within: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output embedding file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    /// Total number of speakers in the population
    #[arg(long)]
    speakers: usize,

    /// How many of them are enrolled
    #[arg(long)]
    enroll_speakers: usize,

    /// Enrollment utterances per enrolled speaker
    #[arg(long)]
    enroll_utterances: usize,

    /// Trial utterances per speaker
    #[arg(long)]
    trial_utterances: usize,

    /// Embedding dimension
    #[arg(long)]
    dim: usize,

    /// Standard deviation of speaker centers per coordinate
    #[arg(long, default_value_t = 1.0)]
    spread: f64,

    /// Standard deviation of utterances around their speaker center
    #[arg(long, default_value_t = 0.1)]
    within: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file for the enrollment set
    #[arg(long)]
    enroll_out: PathBuf,

    /// Output file for the trial set
    #[arg(long)]
    trials_out: PathBuf,
}

#[derive(Args)]
struct AnonymizeArgs {
    /// Embedding file to anonymize
    #[arg(long)]
    input: PathBuf,

    /// Embedding file providing the substitution pool
    #[arg(long)]
    pool: PathBuf,

    /// How many furthest pool vectors are candidates per speaker
    #[arg(long, default_value_t = 200)]
    pool_select: usize,

    /// How many candidates are averaged into the target
    #[arg(long, default_value_t = 100)]
    random_pick: usize,

    /// Distance ranking the pool
    #[arg(long, default_value_t = PoolDistance::Cosine)]
    distance: PoolDistance,

    /// Noise standard deviation; defaults to 0.05 times the input's
    /// within-speaker spread
    #[arg(long)]
    noise_sigma: Option<f64>,

    /// Redraw the random pick for every utterance instead of once per
    /// speaker
    #[arg(long)]
    per_utterance_targets: bool,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output embedding file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RotateArgs {
    /// Embedding file to anonymize
    #[arg(long)]
    input: PathBuf,

    /// Noise standard deviation added after the rotation
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output embedding file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricChoice {
    Eer,
    Top1,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenderChoice {
    F,
    M,
}

#[derive(Args)]
struct EvalArgs {
    /// Trial embeddings (the probe or reconstructed side)
    #[arg(long)]
    trials: PathBuf,

    /// Enrollment embeddings (the reference side)
    #[arg(long)]
    enroll: PathBuf,

    /// Which metric to print
    #[arg(long, value_enum, default_value_t = MetricChoice::Both)]
    metric: MetricChoice,

    /// Restrict both sets to one gender before scoring
    #[arg(long, value_enum)]
    gender: Option<GenderChoice>,

    /// Score against every enrollment utterance instead of speaker means
    #[arg(long)]
    per_utterance: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_scenarios(args),
        Command::Synth(command) => synth(command).map(|()| ExitCode::SUCCESS),
        Command::Eval(args) => eval(args).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Builds a one-entry suite from the single-scenario flags.
fn single_scenario_suite(args: &RunArgs) -> anyhow::Result<Suite> {
    let required = |value: &Option<PathBuf>| value.clone().expect("enforced by clap");
    if !args.oracle && args.enroll_anon.is_none() {
        bail!("--enroll-anon is required unless --oracle is set");
    }
    let wp_config = match args.algorithm {
        Algorithm::WassersteinProcrustes => Some(WpConfig {
            seed: args.seed,
            ..WpConfig::default()
        }),
        Algorithm::Procrustes => None,
    };
    let spec = ScenarioSpec {
        name: args.scenario.clone().expect("enforced by clap"),
        algorithm: args.algorithm,
        oracle: args.oracle,
        gender_dependent: args.gender_dependent,
        pca_k: args.pca,
        length_normalize: args.normalize,
        wp_config,
        scoring: args.scoring,
    };
    let paths = ScenarioPaths {
        enroll: required(&args.enroll),
        enroll_anon: args.enroll_anon.clone(),
        trials: required(&args.trials),
        trials_anon: required(&args.trials_anon),
    };
    Ok(Suite {
        default_output: None,
        entries: vec![SuiteEntry { spec, paths }],
    })
}

fn run_scenarios(args: RunArgs) -> anyhow::Result<ExitCode> {
    let suite = match &args.suite {
        Some(path) => parse_suite_file(path)
            .with_context(|| format!("loading suite {}", path.display()))?,
        None => single_scenario_suite(&args)?,
    };
    let run = run_suite(&suite);
    let table = run.tsv();
    match args.out.or(suite.default_output) {
        Some(path) => {
            std::fs::write(&path, &table)
                .with_context(|| format!("writing {}", path.display()))?;
            println!(
                "wrote {} scenario result(s) to {}",
                run.outcomes.len(),
                path.display()
            );
        }
        None => print!("{table}"),
    }
    for outcome in &run.outcomes {
        if let Err(error) = &outcome.result {
            eprintln!("{error}");
        }
    }
    Ok(if run.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn describe(set: &EmbeddingSet) -> String {
    format!("{} embeddings (dim {})", set.len(), set.dim())
}

fn synth(command: SynthCommand) -> anyhow::Result<()> {
    match command {
        SynthCommand::Population(args) => {
            let set = generate_population(
                args.speakers,
                args.utterances,
                args.dim,
                args.spread,
                args.within,
                args.seed,
            )?;
            save_embedding_set(&set, &args.out)?;
            println!("wrote {} to {}", describe(&set), args.out.display());
        }
        SynthCommand::Split(args) => {
            let (enroll, trials) = generate_evaluation_split(&EvaluationSplitParams {
                num_speakers: args.speakers,
                enroll_speakers: args.enroll_speakers,
                enroll_utterances: args.enroll_utterances,
                trial_utterances: args.trial_utterances,
                dim: args.dim,
                spread: args.spread,
                within: args.within,
                seed: args.seed,
            })?;
            save_embedding_set(&enroll, &args.enroll_out)?;
            save_embedding_set(&trials, &args.trials_out)?;
            println!(
                "wrote {} to {} and {} to {}",
                describe(&enroll),
                args.enroll_out.display(),
                describe(&trials),
                args.trials_out.display()
            );
        }
        SynthCommand::Anonymize(args) => {
            let input = load_embedding_set(&args.input)?;
            let pool = XvectorPool::from_set(&load_embedding_set(&args.pool)?)?;
            let params = AnonymizerParams {
                pool_select: args.pool_select,
                random_pick: args.random_pick,
                distance: args.distance,
                noise_sigma: args.noise_sigma,
                per_utterance_targets: args.per_utterance_targets,
                seed: args.seed,
            };
            let anonymized = anonymize_set(&input, &pool, &params)?;
            save_embedding_set(&anonymized, &args.out)?;
            println!("wrote {} to {}", describe(&anonymized), args.out.display());
        }
        SynthCommand::Rotate(args) => {
            let input = load_embedding_set(&args.input)?;
            let rotated = rotate_anonymize_set(&input, args.noise_sigma, args.seed)?;
            save_embedding_set(&rotated, &args.out)?;
            println!("wrote {} to {}", describe(&rotated), args.out.display());
        }
    }
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut trials = load_embedding_set(&args.trials)?;
    let mut enroll = load_embedding_set(&args.enroll)?;
    if let Some(gender) = args.gender {
        let (trials_f, trials_m) = split_by_gender(&trials)?;
        let (enroll_f, enroll_m) = split_by_gender(&enroll)?;
        (trials, enroll) = match gender {
            GenderChoice::F => (trials_f, enroll_f),
            GenderChoice::M => (trials_m, enroll_m),
        };
    }
    let scoring = if args.per_utterance {
        ScoringMode::PerUtterance
    } else {
        ScoringMode::SpeakerModel
    };
    if args.metric != MetricChoice::Top1 {
        let scores = cosine_score_sets(&trials, &enroll, scoring)?;
        println!("eer\t{:.4}", compute_eer(&scores)?);
    }
    if args.metric != MetricChoice::Eer {
        println!("top1\t{:.4}", top1_speaker_accuracy(&trials, &enroll)?);
    }
    Ok(())
}

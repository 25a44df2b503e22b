//! Pilot for the end-to-end attack analog: a 40-speaker population with the
//! enrollment/trial structure of the evaluation protocol, anonymized by the
//! pool-based anonymizer with default parameters, then attacked with the
//! supervised, unsupervised, and oracle scenarios. Prints per-run metrics and
//! summaries over ten seeded runs so the accuracy thresholds of the
//! corresponding test can be fixed from observed behavior before the test is
//! locked in.

use std::time::Instant;

use despeaker::{
    anonymize_set, compute_eer, cosine_score_sets, generate_evaluation_split,
    generate_population, run_scenario, split_by_gender, Algorithm, AnonymizerParams,
    EmbeddingSet, EvaluationSplitParams, Result, ScenarioInputs, ScenarioSpec, ScoringMode,
    WpConfig, XvectorPool,
};

struct RunOutcome {
    pre_f: f64,
    pre_m: f64,
    proc_f: f64,
    proc_m: f64,
    wp_f: f64,
    wp_m: f64,
    oracle_top1_f: f64,
    oracle_top1_m: f64,
    seconds: f64,
}

/// Per-gender EER of trial rows scored directly against enrollment models.
fn gender_eers(trials: &EmbeddingSet, enroll: &EmbeddingSet) -> Result<(f64, f64)> {
    let (trials_f, trials_m) = split_by_gender(trials)?;
    let (enroll_f, enroll_m) = split_by_gender(enroll)?;
    let scores_f = cosine_score_sets(&trials_f, &enroll_f, ScoringMode::SpeakerModel)?;
    let scores_m = cosine_score_sets(&trials_m, &enroll_m, ScoringMode::SpeakerModel)?;
    Ok((compute_eer(&scores_f)?, compute_eer(&scores_m)?))
}

fn run_once(dim: usize, normalize: bool, run: u64) -> Result<RunOutcome> {
    let started = Instant::now();
    let (enroll, trials) = generate_evaluation_split(&EvaluationSplitParams {
        num_speakers: 40,
        enroll_speakers: 29,
        enroll_utterances: 15,
        trial_utterances: 37,
        dim,
        spread: 1.0,
        within: 0.1,
        seed: 100 + run,
    })?;
    let pool = XvectorPool::from_set(&generate_population(2000, 1, dim, 1.0, 0.1, 500 + run)?)?;

    // The service and the attacker run the same anonymizer with different
    // seeds: the attacker cannot reproduce the service's random draws.
    let service = AnonymizerParams {
        seed: run,
        ..AnonymizerParams::default()
    };
    let attacker = AnonymizerParams {
        seed: 1000 + run,
        ..AnonymizerParams::default()
    };
    let trials_anon = anonymize_set(&trials, &pool, &service)?;
    let enroll_anon = anonymize_set(&enroll, &pool, &attacker)?;

    let (pre_f, pre_m) = gender_eers(&trials_anon, &enroll)?;

    let inputs = ScenarioInputs {
        enroll,
        enroll_anon: Some(enroll_anon),
        trials,
        trials_anon,
    };
    let supervised = ScenarioSpec {
        length_normalize: normalize,
        ..ScenarioSpec::named("pilot-procrustes")
    };
    let unsupervised = ScenarioSpec {
        algorithm: Algorithm::WassersteinProcrustes,
        wp_config: Some(WpConfig {
            seed: run,
            ..WpConfig::default()
        }),
        length_normalize: normalize,
        ..ScenarioSpec::named("pilot-wp")
    };
    let oracle = ScenarioSpec {
        oracle: true,
        length_normalize: normalize,
        ..ScenarioSpec::named("pilot-oracle")
    };
    let proc_report = run_scenario(&supervised, &inputs)?;
    let wp_report = run_scenario(&unsupervised, &inputs)?;
    let oracle_report = run_scenario(&oracle, &inputs)?;

    Ok(RunOutcome {
        pre_f,
        pre_m,
        proc_f: proc_report.eer_f,
        proc_m: proc_report.eer_m,
        wp_f: wp_report.eer_f,
        wp_m: wp_report.eer_m,
        oracle_top1_f: oracle_report.top1_f,
        oracle_top1_m: oracle_report.top1_m,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn summarize(dim: usize, normalize: bool, runs: u64) {
    println!("== dim {dim} normalize {normalize} runs {runs} ==");
    let mut outcomes = Vec::new();
    for run in 0..runs {
        let o = run_once(dim, normalize, run).expect("pilot run failed");
        println!(
            "  run {run}: pre {:.3}/{:.3} procrustes {:.3}/{:.3} wp {:.3}/{:.3} \
             oracle-top1 {:.3}/{:.3} time {:.1}s",
            o.pre_f,
            o.pre_m,
            o.proc_f,
            o.proc_m,
            o.wp_f,
            o.wp_m,
            o.oracle_top1_f,
            o.oracle_top1_m,
            o.seconds
        );
        outcomes.push(o);
    }

    let min_pre = outcomes
        .iter()
        .map(|o| o.pre_f.min(o.pre_m))
        .fold(f64::INFINITY, f64::min);
    let min_reduction = outcomes
        .iter()
        .map(|o| (o.pre_f - o.proc_f).min(o.pre_m - o.proc_m))
        .fold(f64::INFINITY, f64::min);
    let min_oracle_top1 = outcomes
        .iter()
        .map(|o| o.oracle_top1_f.min(o.oracle_top1_m))
        .fold(f64::INFINITY, f64::min);
    let proc_means: Vec<f64> = outcomes.iter().map(|o| 0.5 * (o.proc_f + o.proc_m)).collect();
    let wp_means: Vec<f64> = outcomes.iter().map(|o| 0.5 * (o.wp_f + o.wp_m)).collect();
    let wp_not_better = outcomes
        .iter()
        .zip(&proc_means)
        .zip(&wp_means)
        .filter(|((_, p), w)| w >= p)
        .count();

    println!("  min per-gender pre-attack eer: {min_pre:.3}");
    println!("  min per-gender eer reduction by supervised attack: {min_reduction:.3}");
    println!("  min per-gender oracle top-1: {min_oracle_top1:.3}");
    println!(
        "  median mean eer: procrustes {:.3} wp {:.3} (wp >= procrustes in {}/{} runs)",
        median(&proc_means),
        median(&wp_means),
        wp_not_better,
        outcomes.len()
    );
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut dim = 32;
    let mut runs = 10;
    let mut regimes = vec![true, false];
    for arg in &args {
        match arg.split_once('=') {
            Some(("dim", v)) => dim = v.parse().unwrap(),
            Some(("runs", v)) => runs = v.parse().unwrap(),
            Some(("norm", v)) => {
                regimes = match v {
                    "on" => vec![true],
                    "off" => vec![false],
                    "both" => vec![true, false],
                    _ => panic!("unknown norm setting"),
                }
            }
            _ => panic!("unknown arg {arg}"),
        }
    }
    for normalize in regimes {
        summarize(dim, normalize, runs);
    }
}

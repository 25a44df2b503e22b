//! Pilot for the unsupervised solver: planted rotation-plus-shuffle
//! recovery rates across seeds, for the gaussian and clustered regimes.
//! Run with `cargo run --release --example pilot_unsupervised`.

use despeaker::data::{EmbeddingSet, ExtractorTag, Gender};
use despeaker::wasserstein::{matching_accuracy, solve_wasserstein_procrustes, WpConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn set_from_matrix(m: DMatrix<f64>) -> EmbeddingSet {
    let n = m.nrows();
    EmbeddingSet::new(
        m,
        (0..n).map(|i| format!("u{i}")).collect(),
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..n)
            .map(|i| if i % 2 == 0 { Gender::Female } else { Gender::Male })
            .collect(),
        ExtractorTag::Original,
    )
    .unwrap()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let gaussian = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gaussian.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for j in 0..d {
        if r_diag[j] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

fn shuffle(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut pi: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        pi.swap(i, j);
    }
    pi
}

struct Trial {
    accuracy: f64,
    rotation_error: f64,
    seconds: f64,
}

fn run_trial(x: DMatrix<f64>, data_seed: u64, config: &WpConfig) -> Trial {
    let n = x.nrows();
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed ^ 0x5eed);
    let r = random_orthogonal(&mut rng, d);
    let rotated = &x * &r;
    let pi = shuffle(&mut rng, n);
    let mut y = DMatrix::zeros(n, d);
    for i in 0..n {
        for c in 0..d {
            y[(pi[i], c)] = rotated[(i, c)];
        }
    }
    let source = set_from_matrix(x);
    let target = set_from_matrix(y);
    let start = std::time::Instant::now();
    let (rotation, permutation) =
        solve_wasserstein_procrustes(&source, &target, config).expect("solver failed");
    let seconds = start.elapsed().as_secs_f64();
    Trial {
        accuracy: matching_accuracy(&permutation, &pi).expect("length"),
        rotation_error: (rotation.matrix() - &r).norm(),
        seconds,
    }
}

fn gaussian_cloud(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn clustered_cloud(
    seed: u64,
    clusters: usize,
    per_cluster: usize,
    d: usize,
    within: f64,
) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids = DMatrix::from_fn(clusters, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    DMatrix::from_fn(clusters * per_cluster, d, |i, j| {
        centroids[(i / per_cluster, j)] + within * rng.sample::<f64, _>(StandardNormal)
    })
}

fn summarize(label: &str, config: &WpConfig, make: impl Fn(u64) -> DMatrix<f64>) {
    let mut ok = 0;
    let mut lines = Vec::new();
    let seeds = 10;
    for seed in 0..seeds {
        let x = make(seed);
        let config = WpConfig {
            seed,
            ..config.clone()
        };
        let t = run_trial(x, seed, &config);
        let good = t.accuracy >= 0.95 && t.rotation_error <= 0.1;
        if good {
            ok += 1;
        }
        lines.push(format!(
            "  seed {seed}: accuracy {:.3} rotation_error {:.4} time {:.2}s{}",
            t.accuracy,
            t.rotation_error,
            t.seconds,
            if good { "" } else { "  *" }
        ));
    }
    println!("{label}: {ok}/{seeds} runs at accuracy >= 0.95 and error <= 0.1");
    for line in lines {
        println!("{line}");
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut config = WpConfig::default();
    let mut regimes = vec!["gauss", "cluster"];
    for arg in &args {
        match arg.split_once('=') {
            Some(("epochs", v)) => config.epochs_per_level = v.parse().unwrap(),
            Some(("lr", v)) => config.learning_rate = v.parse().unwrap(),
            Some(("eps", v)) => config.sinkhorn_epsilon = v.parse().unwrap(),
            Some(("batch", v)) => config.batch_size_initial = v.parse().unwrap(),
            Some(("doublings", v)) => config.batch_doublings = v.parse().unwrap(),
            Some(("init", v)) => config.init_subset_size = v.parse().unwrap(),
            Some(("regime", v)) => regimes = vec![match v {
                "gauss" => "gauss",
                "cluster" => "cluster",
                _ => panic!("unknown regime"),
            }],
            _ => panic!("unknown arg {arg}"),
        }
    }
    println!(
        "config: batch {} doublings {} epochs {} lr {} eps {} sinkhorn_iters {} init {}",
        config.batch_size_initial,
        config.batch_doublings,
        config.epochs_per_level,
        config.learning_rate,
        config.sinkhorn_epsilon,
        config.sinkhorn_iterations,
        config.init_subset_size
    );
    for regime in regimes {
        match regime {
            "gauss" => summarize("gaussian n=100 d=8", &config, |s| gaussian_cloud(s, 100, 8)),
            "cluster" => summarize(
                "clusters 20x5 d=8 within=0.05",
                &config,
                |s| clustered_cloud(s, 20, 5, 8, 0.05),
            ),
            _ => unreachable!(),
        }
    }
}

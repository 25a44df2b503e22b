//! Unsupervised alignment: jointly estimates a one-to-one correspondence
//! (via entropic optimal transport) and an orthogonal rotation (via
//! Procrustes updates) between two unlabeled embedding sets.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::procrustes::{orthogonal_polar_factor, orthogonality_error, Rotation};

/// A coupling between two point sets: nonnegative matrix whose row and
/// column sums approach the prescribed marginals as Sinkhorn converges.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    matrix: DMatrix<f64>,
    row_marginals: DVector<f64>,
    col_marginals: DVector<f64>,
}

impl TransportPlan {
    /// Validates shapes, nonnegativity, and finiteness.
    pub fn new(
        matrix: DMatrix<f64>,
        row_marginals: DVector<f64>,
        col_marginals: DVector<f64>,
    ) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidInput("transport plan must be non-empty".into()));
        }
        if row_marginals.len() != matrix.nrows() || col_marginals.len() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "marginals ({}, {}) vs plan {}x{}",
                row_marginals.len(),
                col_marginals.len(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "plan entries must be finite and nonnegative".into(),
            ));
        }
        if row_marginals
            .iter()
            .chain(col_marginals.iter())
            .any(|v| !v.is_finite() || *v <= 0.0)
        {
            return Err(Error::InvalidInput(
                "marginals must be finite and positive".into(),
            ));
        }
        Ok(Self {
            matrix,
            row_marginals,
            col_marginals,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn row_marginals(&self) -> &DVector<f64> {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &DVector<f64> {
        &self.col_marginals
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Largest absolute deviation of a row or column sum from its marginal.
    pub fn max_marginal_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows() {
            worst = worst.max((self.matrix.row(i).sum() - self.row_marginals[i]).abs());
        }
        for j in 0..self.cols() {
            worst = worst.max((self.matrix.column(j).sum() - self.col_marginals[j]).abs());
        }
        worst
    }
}

/// Hyperparameters of the alternating solver. `sinkhorn_epsilon` is a
/// coefficient relative to the median entry of the current cost matrix, so
/// behavior is invariant to global scaling of the embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct WpConfig {
    pub batch_size_initial: usize,
    pub batch_doublings: usize,
    pub epochs_per_level: usize,
    pub learning_rate: f64,
    pub sinkhorn_epsilon: f64,
    pub sinkhorn_iterations: usize,
    pub seed: u64,
    pub init_subset_size: usize,
}

impl Default for WpConfig {
    fn default() -> Self {
        Self {
            batch_size_initial: 64,
            batch_doublings: 3,
            epochs_per_level: 50,
            learning_rate: 0.5,
            sinkhorn_epsilon: 0.05,
            sinkhorn_iterations: 100,
            seed: 0,
            init_subset_size: 256,
        }
    }
}

impl WpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size_initial == 0
            || self.batch_doublings == 0
            || self.epochs_per_level == 0
            || self.sinkhorn_iterations == 0
            || self.init_subset_size == 0
        {
            return Err(Error::InvalidInput(
                "all solver counts must be at least 1".into(),
            ));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if self.sinkhorn_epsilon <= 0.0 || !self.sinkhorn_epsilon.is_finite() {
            return Err(Error::InvalidInput(
                "sinkhorn_epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Runs Sinkhorn scaling on `exp(-cost / epsilon)` with uniform marginals
/// 1/n and 1/m for `iterations` full update rounds. Fails with the iteration
/// index if a scaling vector underflows to zero or overflows, which signals
/// an epsilon far too small for the cost scale.
pub fn sinkhorn_transport(
    cost: &DMatrix<f64>,
    epsilon: f64,
    iterations: usize,
) -> Result<TransportPlan> {
    let n = cost.nrows();
    let m = cost.ncols();
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("cost matrix must be non-empty".into()));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("cost entries must be finite".into()));
    }
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }

    let a = DVector::from_element(n, 1.0 / n as f64);
    let b = DVector::from_element(m, 1.0 / m as f64);
    let kernel = cost.map(|c| (-c / epsilon).exp());
    let mut u = DVector::from_element(n, 1.0);
    let mut v = DVector::from_element(m, 1.0);

    for iteration in 1..=iterations {
        let kv = &kernel * &v;
        for i in 0..n {
            u[i] = a[i] / kv[i];
        }
        if u.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::SinkhornUnderflow { iteration });
        }
        let ktu = kernel.tr_mul(&u);
        for j in 0..m {
            v[j] = b[j] / ktu[j];
        }
        if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::SinkhornUnderflow { iteration });
        }
    }

    let plan = DMatrix::from_fn(n, m, |i, j| u[i] * kernel[(i, j)] * v[j]);
    TransportPlan::new(plan, a, b)
}

/// Extracts the permutation maximizing the sum of selected entries from a
/// square plan, solved exactly with a shortest-augmenting-path assignment
/// algorithm. Ties resolve to the lowest-index optimal assignment.
pub fn harden_plan(plan: &TransportPlan) -> Result<Vec<usize>> {
    if plan.rows() != plan.cols() {
        return Err(Error::NonSquarePlan {
            rows: plan.rows(),
            cols: plan.cols(),
        });
    }
    let n = plan.rows();
    let cost = DMatrix::from_fn(n, n, |i, j| -plan.matrix()[(i, j)]);
    Ok(min_cost_assignment(&cost))
}

/// Exact minimum-cost assignment (Jonker-Volgenant style shortest
/// augmenting paths with potentials). Returns the column assigned to each
/// row. O(n^3).
fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let virtual_col = n;
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n + 1];
    // p[j]: row currently matched to column j; usize::MAX = unmatched.
    let mut p = vec![usize::MAX; n + 1];

    for row in 0..n {
        p[virtual_col] = row;
        let mut j0 = virtual_col;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut way = vec![virtual_col; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = virtual_col;
            for j in 0..n {
                if !used[j] {
                    let slack = cost[(i0, j)] - u[i0] - v[j];
                    if slack < min_slack[j] {
                        min_slack[j] = slack;
                        way[j] = j0;
                    }
                    if min_slack[j] < delta {
                        delta = min_slack[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == usize::MAX {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == virtual_col {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 0..n {
        if p[j] != usize::MAX {
            assignment[p[j]] = j;
        }
    }
    assignment
}

/// Fraction of indices where the two permutations agree. Empty inputs count
/// as full agreement.
pub fn matching_accuracy(found: &[usize], truth: &[usize]) -> Result<f64> {
    if found.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "permutation lengths differ: {} vs {}",
            found.len(),
            truth.len()
        )));
    }
    if found.is_empty() {
        return Ok(1.0);
    }
    let agree = found.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / found.len() as f64)
}

/// Pairwise squared euclidean distances between the rows of two matrices,
/// computed via the norm expansion and clamped at zero.
fn squared_distance_cost(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let cross = x * y.transpose();
    let x_norms: Vec<f64> = (0..x.nrows()).map(|i| x.row(i).norm_squared()).collect();
    let y_norms: Vec<f64> = (0..y.nrows()).map(|j| y.row(j).norm_squared()).collect();
    DMatrix::from_fn(x.nrows(), y.nrows(), |i, j| {
        (x_norms[i] + y_norms[j] - 2.0 * cross[(i, j)]).max(0.0)
    })
}

/// Median of all cost entries (average of the two middle order statistics
/// for even counts).
fn median_entry(cost: &DMatrix<f64>) -> f64 {
    let mut values: Vec<f64> = cost.iter().copied().collect();
    let mid = values.len() / 2;
    let (_, upper_mid, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper_mid = *upper_mid;
    if values.len() % 2 == 1 {
        upper_mid
    } else {
        let lower_mid = values[..mid]
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
        (lower_mid + upper_mid) / 2.0
    }
}

/// Absolute epsilon for a cost matrix: the relative coefficient times the
/// median cost, falling back to 1 when the costs collapse to zero.
fn effective_epsilon(relative: f64, cost: &DMatrix<f64>) -> f64 {
    let median = median_entry(cost);
    if median > 0.0 {
        relative * median
    } else {
        1.0
    }
}

fn gather_rows(source: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), source.ncols(), |r, c| {
        source[(indices[r], c)]
    })
}

/// Sorted distances from each row to every other row. The profile is
/// invariant to any rotation of the whole set and to row order, so it
/// identifies corresponding points across two differently-rotated copies.
fn sorted_distance_profiles(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = m.nrows();
    (0..n)
        .map(|i| {
            let mut distances: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (m.row(i) - m.row(j)).norm())
                .collect();
            distances.sort_by(f64::total_cmp);
            distances
        })
        .collect()
}

/// Initialization cost: squared distances between sorted distance profiles.
/// Raw point distances carry no matching signal before the rotation is
/// known (their norm terms are constant over permutations), so the
/// initializer matches on this rotation-invariant signature instead.
fn profile_cost(xs: &DMatrix<f64>, ys: &DMatrix<f64>) -> DMatrix<f64> {
    let px = sorted_distance_profiles(xs);
    let py = sorted_distance_profiles(ys);
    DMatrix::from_fn(px.len(), py.len(), |i, j| {
        px[i]
            .iter()
            .zip(&py[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    })
}

fn sample_indices(rng: &mut ChaCha8Rng, population: usize, amount: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, population, amount).into_vec()
}

fn pair_residual(mapped: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    (mapped - target).iter().map(|v| v * v).sum()
}

/// Jointly estimates a rotation and a permutation that locally minimize the
/// sum of squared distances between mapped source rows and matched target
/// rows. The schedule: multi-start initialization on a subset, stochastic
/// alternation over growing batches (Sinkhorn plan, then a learning-rate
/// step toward the plan-weighted Procrustes target, re-projected onto the
/// orthogonal manifold), and a final full-set matching plus exact solve.
/// Fully deterministic for a fixed `config.seed`. Speaker and utterance
/// labels are never read.
pub fn solve_wasserstein_procrustes(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    config: &WpConfig,
) -> Result<(Rotation, Vec<usize>)> {
    config.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source dimension {} vs target dimension {}",
            source.dim(),
            target.dim()
        )));
    }
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} rows, target has {}; a permutation needs equal counts",
            source.len(),
            target.len()
        )));
    }
    if source.is_empty() {
        return Err(Error::InvalidInput(
            "cannot align empty embedding sets".into(),
        ));
    }

    let x = source.vectors();
    let y = target.vectors();
    let n = x.nrows();
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Multi-start initialization: match a subset on rotation-invariant
    // distance profiles with Sinkhorn at a loose epsilon, harden, solve
    // exactly on the matched pairs; keep the lowest-objective candidate.
    let init_n = config.init_subset_size.min(n);
    let mut w = DMatrix::identity(d, d);
    let mut best_objective = f64::INFINITY;
    for _ in 0..5 {
        let src_idx = sample_indices(&mut rng, n, init_n);
        let tgt_idx = sample_indices(&mut rng, n, init_n);
        let xs = gather_rows(x, &src_idx);
        let ys = gather_rows(y, &tgt_idx);
        let cost = profile_cost(&xs, &ys);
        let epsilon = 10.0 * effective_epsilon(config.sinkhorn_epsilon, &cost);
        let plan = sinkhorn_transport(&cost, epsilon, config.sinkhorn_iterations)?;
        let matching = harden_plan(&plan)?;
        let ys_matched = gather_rows(&ys, &matching);
        let (candidate, _) = orthogonal_polar_factor(xs.tr_mul(&ys_matched));
        let objective = pair_residual(&(&xs * &candidate), &ys_matched);
        if objective < best_objective {
            best_objective = objective;
            w = candidate;
        }
    }

    // Stochastic alternation over doubling batch sizes.
    let mut batch = config.batch_size_initial.min(n);
    for _level in 0..=config.batch_doublings {
        for _epoch in 0..config.epochs_per_level {
            let src_idx = sample_indices(&mut rng, n, batch);
            let tgt_idx = sample_indices(&mut rng, n, batch);
            let xb = gather_rows(x, &src_idx);
            let yb = gather_rows(y, &tgt_idx);
            let cost = squared_distance_cost(&(&xb * &w), &yb);
            let epsilon = effective_epsilon(config.sinkhorn_epsilon, &cost);
            let plan = sinkhorn_transport(&cost, epsilon, config.sinkhorn_iterations)?;
            let cross = xb.tr_mul(&(plan.matrix() * &yb));
            let (w_star, _) = orthogonal_polar_factor(cross);
            let blended = &w * (1.0 - config.learning_rate) + &w_star * config.learning_rate;
            let (reprojected, _) = orthogonal_polar_factor(blended);
            w = reprojected;
            debug_assert!(orthogonality_error(&w) <= crate::procrustes::ORTHOGONALITY_TOL);
        }
        batch = (batch * 2).min(n);
    }

    // Final full-set matching and exact solve on the matched pairs.
    let cost = squared_distance_cost(&(x * &w), y);
    let epsilon = effective_epsilon(config.sinkhorn_epsilon, &cost);
    let plan = sinkhorn_transport(&cost, epsilon, config.sinkhorn_iterations)?;
    let permutation = harden_plan(&plan)?;
    let y_matched = gather_rows(y, &permutation);
    let residual_before = pair_residual(&(x * &w), &y_matched);
    let (w_final, rank) = orthogonal_polar_factor(x.tr_mul(&y_matched));
    let residual_after = pair_residual(&(x * &w_final), &y_matched);
    debug_assert!(residual_after <= residual_before + 1e-9 * residual_before.max(1.0));

    let mut provenance = format!(
        "wasserstein-procrustes(seed={}, pairs={n}, objective={residual_after:.6e})",
        config.seed
    );
    if rank < d {
        provenance.push_str(&format!(
            "; warning: cross-covariance rank {rank} < {d}, minimizer not unique"
        ));
    }
    let rotation = Rotation::new(w_final, provenance)?;
    Ok((rotation, permutation))
}

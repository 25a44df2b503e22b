//! Per-set principal component analysis, used as dimensionality reduction
//! and pre-alignment before rotation estimation. Each set is fitted
//! independently; ordering both spaces by variance is what aligns them.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::procrustes::ORTHOGONALITY_TOL;

/// A fitted PCA reduction: centering mean, orthonormal component rows, and
/// the fraction of total variance each component explains.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: DVector<f64>,
    components: DMatrix<f64>,
    explained_variance_ratio: DVector<f64>,
}

impl PcaModel {
    /// Validates and wraps a model: components are k×d with orthonormal rows
    /// (within 1e-8), ratios are nonnegative, non-increasing, and sum to at
    /// most 1.
    pub fn new(
        mean: DVector<f64>,
        components: DMatrix<f64>,
        explained_variance_ratio: DVector<f64>,
    ) -> Result<Self> {
        let k = components.nrows();
        let d = components.ncols();
        if k == 0 || d == 0 || k > d {
            return Err(Error::InvalidInput(format!(
                "components must be k x d with 1 <= k <= d, found {k} x {d}"
            )));
        }
        if mean.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, components have {} columns",
                mean.len(),
                d
            )));
        }
        if explained_variance_ratio.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} variance ratios for {} components",
                explained_variance_ratio.len(),
                k
            )));
        }
        if mean.iter().any(|v| !v.is_finite())
            || components.iter().any(|v| !v.is_finite())
            || explained_variance_ratio.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("model values must be finite".into()));
        }
        let gram = &components * components.transpose();
        let mut deviation = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((gram[(i, j)] - expect).abs());
            }
        }
        if deviation > ORTHOGONALITY_TOL {
            return Err(Error::InvalidInput(format!(
                "component rows are not orthonormal: max deviation {deviation:.3e}"
            )));
        }
        let mut sum = 0.0;
        for i in 0..k {
            let r = explained_variance_ratio[i];
            if r < 0.0 {
                return Err(Error::InvalidInput(
                    "variance ratios must be nonnegative".into(),
                ));
            }
            if i > 0 && r > explained_variance_ratio[i - 1] + 1e-12 {
                return Err(Error::InvalidInput(
                    "variance ratios must be non-increasing".into(),
                ));
            }
            sum += r;
        }
        if sum > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "variance ratios sum to {sum}, expected at most 1"
            )));
        }
        Ok(Self {
            mean,
            components,
            explained_variance_ratio,
        })
    }

    /// Input dimension d.
    pub fn input_dim(&self) -> usize {
        self.components.ncols()
    }

    /// Output dimension k.
    pub fn output_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn explained_variance_ratio(&self) -> &DVector<f64> {
        &self.explained_variance_ratio
    }
}

/// Fits a k-component PCA on the set with 1/(N-1) covariance normalization.
/// Components are the top-k right singular vectors of the centered data,
/// each flipped so its largest-magnitude entry is positive (first index wins
/// ties). Requires 1 <= k <= min(N, d) and non-degenerate data.
pub fn fit_pca(set: &EmbeddingSet, k: usize) -> Result<PcaModel> {
    let n = set.len();
    let d = set.dim();
    if k == 0 || k > n.min(d) {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range, expected 1 <= k <= min(N, d) = {}",
            n.min(d)
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "zero-variance data: need at least 2 rows to estimate variance".into(),
        ));
    }

    let mut mean = DVector::zeros(d);
    for i in 0..n {
        for j in 0..d {
            mean[j] += set.vectors()[(i, j)];
        }
    }
    mean /= n as f64;

    let centered = DMatrix::from_fn(n, d, |i, j| set.vectors()[(i, j)] - mean[j]);
    let scale: f64 = set.vectors().iter().map(|v| v * v).sum();
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");

    let total_variance: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if total_variance <= scale * 1e-24 {
        return Err(Error::InvalidInput(
            "zero-variance data: all rows are identical".into(),
        ));
    }

    let mut components = DMatrix::zeros(k, d);
    for i in 0..k {
        let mut best = 0usize;
        for j in 1..d {
            if v_t[(i, j)].abs() > v_t[(i, best)].abs() {
                best = j;
            }
        }
        let flip = if v_t[(i, best)] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(i, j)] = flip * v_t[(i, j)];
        }
    }

    let ratios = DVector::from_fn(k, |i, _| {
        let s = svd.singular_values[i];
        s * s / total_variance
    });

    PcaModel::new(mean, components, ratios)
}

/// Projects every row: x -> (x - mean) * components^T. Output dimension is
/// k; metadata is preserved.
pub fn transform_pca(set: &EmbeddingSet, model: &PcaModel) -> Result<EmbeddingSet> {
    if set.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "set dimension {} vs model dimension {}",
            set.dim(),
            model.input_dim()
        )));
    }
    let n = set.len();
    let d = set.dim();
    let centered = DMatrix::from_fn(n, d, |i, j| set.vectors()[(i, j)] - model.mean()[j]);
    set.with_vectors(centered * model.components().transpose())
}

/// True iff the model's retained components explain at least `threshold` of
/// the total variance. `threshold` is expected in [0, 1].
pub fn explained_variance_check(model: &PcaModel, threshold: f64) -> bool {
    model.explained_variance_ratio().sum() >= threshold
}

/// Writes a model in the text format:
///
/// ```text
/// <k> <d>
/// mean <d values>
/// ratio <k values>
/// <row of d values> x k
/// ```
pub fn save_pca_model(model: &PcaModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let k = model.output_dim();
    let d = model.input_dim();
    let mut out = String::new();
    out.push_str(&format!("{k} {d}\n"));
    let mean: Vec<String> = (0..d).map(|j| model.mean()[j].to_string()).collect();
    out.push_str(&format!("mean {}\n", mean.join(" ")));
    let ratio: Vec<String> = (0..k)
        .map(|i| model.explained_variance_ratio()[i].to_string())
        .collect();
    out.push_str(&format!("ratio {}\n", ratio.join(" ")));
    for i in 0..k {
        let row: Vec<String> = (0..d).map(|j| model.components()[(i, j)].to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })
}

/// Loads a model and re-validates its invariants.
pub fn load_pca_model(path: impl AsRef<Path>) -> Result<PcaModel> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })?;
    let fmt_err = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| fmt_err(1, "empty file, expected '<k> <d>' header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(fmt_err(header_line, "header must be '<k> <d>'".into()));
    }
    let k: usize = fields[0]
        .parse()
        .map_err(|_| fmt_err(header_line, format!("invalid component count '{}'", fields[0])))?;
    let d: usize = fields[1]
        .parse()
        .map_err(|_| fmt_err(header_line, format!("invalid dimension '{}'", fields[1])))?;
    if k == 0 || d == 0 {
        return Err(fmt_err(header_line, "k and d must be positive".into()));
    }

    let parse_labeled = |label: &str,
                         expected: usize,
                         entry: Option<(usize, &str)>|
     -> Result<Vec<f64>> {
        let (line_no, text) =
            entry.ok_or_else(|| fmt_err(header_line, format!("expected '{label}' line")))?;
        let rest = text
            .strip_prefix(label)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| fmt_err(line_no, format!("expected '{label} <values>' line")))?;
        let values: Vec<f64> = rest
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| fmt_err(line_no, format!("invalid value '{t}'")))
            })
            .collect::<Result<_>>()?;
        if values.len() != expected {
            return Err(fmt_err(
                line_no,
                format!("{label} line has {} values, expected {expected}", values.len()),
            ));
        }
        Ok(values)
    };

    let mean = DVector::from_vec(parse_labeled("mean", d, lines.next())?);
    let ratio = DVector::from_vec(parse_labeled("ratio", k, lines.next())?);

    let mut components = DMatrix::zeros(k, d);
    for i in 0..k {
        let (row_line, row_text) = lines
            .next()
            .ok_or_else(|| fmt_err(header_line, format!("expected {k} component rows, found {i}")))?;
        let tokens: Vec<&str> = row_text.split_whitespace().collect();
        if tokens.len() != d {
            return Err(fmt_err(
                row_line,
                format!("row has {} values, expected {d}", tokens.len()),
            ));
        }
        for (j, token) in tokens.iter().enumerate() {
            components[(i, j)] = token
                .parse()
                .map_err(|_| fmt_err(row_line, format!("invalid value '{token}'")))?;
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(fmt_err(line_no, "unexpected content after component rows".into()));
    }
    PcaModel::new(mean, components, ratio)
}

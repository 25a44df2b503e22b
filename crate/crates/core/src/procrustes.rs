//! Orthogonal Procrustes: the least-squares orthogonal map between paired
//! embedding sets, plus the rotation type it produces.

use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{EmbeddingSet, PairedSets};
use crate::error::{Error, Result};

/// Maximum tolerated deviation of `W^T W` from the identity, measured as the
/// largest absolute entry of the difference.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// An orthogonal linear map between two embedding spaces, with a free-form
/// provenance note describing how it was obtained.
///
/// The matrix maps source (clear) coordinates to target (anonymized)
/// coordinates by right multiplication of row vectors; the transpose maps
/// back. Orthogonality is enforced at construction and again when loading
/// from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
    provenance: String,
}

impl Rotation {
    /// Validates squareness, finiteness, and orthogonality, then wraps the
    /// matrix. The provenance note must be a non-empty single line.
    pub fn new(matrix: DMatrix<f64>, provenance: impl Into<String>) -> Result<Self> {
        let provenance = provenance.into();
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "rotation must be square and non-empty, found {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "rotation entries must be finite".into(),
            ));
        }
        if provenance.is_empty() || provenance.contains('\n') {
            return Err(Error::InvalidInput(
                "provenance must be a non-empty single line".into(),
            ));
        }
        let deviation = orthogonality_error(&matrix);
        if deviation > ORTHOGONALITY_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not orthogonal: max |W^T W - I| = {deviation:.3e} exceeds {ORTHOGONALITY_TOL:.0e}"
            )));
        }
        Ok(Self { matrix, provenance })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Largest absolute entry of `W^T W - I`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.matrix)
    }
}

/// Largest absolute entry of `M^T M - I`.
pub fn orthogonality_error(matrix: &DMatrix<f64>) -> f64 {
    let d = matrix.ncols();
    let mut gram = matrix.tr_mul(matrix);
    for i in 0..d {
        gram[(i, i)] -= 1.0;
    }
    gram.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Computes the orthogonal polar factor `U V^T` of a square matrix along
/// with the numerical rank of the input. For rank-deficient inputs the
/// factor is still orthogonal but no longer unique.
pub(crate) fn orthogonal_polar_factor(m: DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let d = m.nrows();
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let max_sv = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let tol = max_sv * d as f64 * f64::EPSILON;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol && max_sv > 0.0)
        .count();
    (u * v_t, rank)
}

/// Fits the orthogonal map `W` minimizing `||A W - B||_F` over orthogonal
/// matrices, where `A` holds the paired source rows and `B` the paired
/// target rows. The solution is the polar factor of `A^T B`; no translation
/// or scaling is removed. A rank-deficient cross-covariance is accepted but
/// flagged in the provenance note, since the minimizer is then not unique.
pub fn solve_procrustes(paired: &PairedSets<'_>) -> Result<Rotation> {
    if paired.is_empty() {
        return Err(Error::InvalidInput(
            "cannot fit a rotation to an empty pairing".into(),
        ));
    }
    let d = paired.source().dim();
    if d != paired.target().dim() {
        return Err(Error::DimensionMismatch(format!(
            "source dimension {} vs target dimension {}",
            d,
            paired.target().dim()
        )));
    }
    let (a, b) = paired.paired_matrices();
    let cross = a.tr_mul(&b);
    let (w, rank) = orthogonal_polar_factor(cross);
    let mut provenance = format!("procrustes(pairs={})", paired.len());
    if rank < d {
        provenance.push_str(&format!(
            "; warning: cross-covariance rank {rank} < {d}, minimizer not unique"
        ));
    }
    Rotation::new(w, provenance)
}

/// Applies the map to every row: source coordinates to target coordinates.
pub fn apply_rotation(set: &EmbeddingSet, rotation: &Rotation) -> Result<EmbeddingSet> {
    if set.dim() != rotation.dim() {
        return Err(Error::DimensionMismatch(format!(
            "set dimension {} vs rotation dimension {}",
            set.dim(),
            rotation.dim()
        )));
    }
    set.with_vectors(set.vectors() * rotation.matrix())
}

/// Applies the transpose map to every row: target coordinates back to source
/// coordinates. For an orthogonal map this is the exact inverse, so it is
/// the de-anonymization direction.
pub fn apply_inverse_rotation(set: &EmbeddingSet, rotation: &Rotation) -> Result<EmbeddingSet> {
    if set.dim() != rotation.dim() {
        return Err(Error::DimensionMismatch(format!(
            "set dimension {} vs rotation dimension {}",
            set.dim(),
            rotation.dim()
        )));
    }
    set.with_vectors(set.vectors() * rotation.matrix().transpose())
}

/// Squared Frobenius residual `||A W - B||_F^2` over the paired rows.
pub fn alignment_residual(paired: &PairedSets<'_>, rotation: &Rotation) -> Result<f64> {
    if paired.source().dim() != rotation.dim() || paired.target().dim() != rotation.dim() {
        return Err(Error::DimensionMismatch(format!(
            "paired dimensions {} and {} vs rotation dimension {}",
            paired.source().dim(),
            paired.target().dim(),
            rotation.dim()
        )));
    }
    let (a, b) = paired.paired_matrices();
    let diff = a * rotation.matrix() - b;
    Ok(diff.iter().map(|v| v * v).sum())
}

/// Writes a rotation in the text format:
///
/// ```text
/// <d>
/// provenance <string>
/// <row of d values> x d
/// ```
///
/// Values use the shortest exact decimal representation, so a reloaded
/// rotation is bit-identical and passes the orthogonality check.
pub fn save_rotation(rotation: &Rotation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("{}\n", rotation.dim()));
    out.push_str(&format!("provenance {}\n", rotation.provenance()));
    for i in 0..rotation.dim() {
        let row: Vec<String> = (0..rotation.dim())
            .map(|j| rotation.matrix()[(i, j)].to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })
}

/// Loads a rotation and re-validates orthogonality.
pub fn load_rotation(path: impl AsRef<Path>) -> Result<Rotation> {
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

    let (dim_line, dim_text) = lines
        .next()
        .ok_or_else(|| fmt_err(1, "empty file, expected '<d>' header".into()))?;
    let d: usize = dim_text
        .trim()
        .parse()
        .map_err(|_| fmt_err(dim_line, format!("invalid dimension '{}'", dim_text.trim())))?;
    if d == 0 {
        return Err(fmt_err(dim_line, "dimension must be positive".into()));
    }

    let (prov_line, prov_text) = lines
        .next()
        .ok_or_else(|| fmt_err(dim_line, "expected 'provenance <string>' line".into()))?;
    let provenance = prov_text
        .strip_prefix("provenance ")
        .ok_or_else(|| fmt_err(prov_line, "expected 'provenance <string>' line".into()))?
        .to_string();

    let mut matrix = DMatrix::zeros(d, d);
    for i in 0..d {
        let (row_line, row_text) = lines
            .next()
            .ok_or_else(|| fmt_err(prov_line, format!("expected {d} matrix rows, found {i}")))?;
        let tokens: Vec<&str> = row_text.split_whitespace().collect();
        if tokens.len() != d {
            return Err(fmt_err(
                row_line,
                format!("row has {} values, expected {d}", tokens.len()),
            ));
        }
        for (j, token) in tokens.iter().enumerate() {
            matrix[(i, j)] = token
                .parse()
                .map_err(|_| fmt_err(row_line, format!("invalid value '{token}'")))?;
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(fmt_err(line_no, "unexpected content after matrix rows".into()));
    }
    Rotation::new(matrix, provenance)
}

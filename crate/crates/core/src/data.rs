//! Embedding sets: the labelled collections of vectors every other module
//! consumes, plus their on-disk text format.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Speaker gender label attached to every utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gender::Female => write!(f, "F"),
            Gender::Male => write!(f, "M"),
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "F" => Ok(Gender::Female),
            "M" => Ok(Gender::Male),
            other => Err(format!("unknown gender '{other}', expected F or M")),
        }
    }
}

/// Which extractor produced a set's embeddings. `Retrained` marks an
/// extractor fitted on anonymized speech rather than on clear speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractorTag {
    #[default]
    Original,
    Retrained,
}

impl fmt::Display for ExtractorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractorTag::Original => write!(f, "original"),
            ExtractorTag::Retrained => write!(f, "retrained"),
        }
    }
}

impl FromStr for ExtractorTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "original" => Ok(ExtractorTag::Original),
            "retrained" => Ok(ExtractorTag::Retrained),
            other => Err(format!(
                "unknown extractor tag '{other}', expected original or retrained"
            )),
        }
    }
}

/// A set of speaker embeddings with per-row metadata.
///
/// Rows of `vectors` correspond 1:1 with the metadata vectors. Utterance ids
/// are unique within a set; all values are finite. The struct is immutable
/// after construction: transformations return new sets.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vectors: DMatrix<f64>,
    utterance_ids: Vec<String>,
    speaker_ids: Vec<String>,
    genders: Vec<Gender>,
    extractor_tag: ExtractorTag,
}

impl EmbeddingSet {
    /// Builds a set after checking the invariants: parallel metadata lengths,
    /// unique utterance ids, finite values, and a positive dimension. An
    /// empty set (zero rows) is allowed in memory; the file format is not
    /// permitted to encode one.
    pub fn new(
        vectors: DMatrix<f64>,
        utterance_ids: Vec<String>,
        speaker_ids: Vec<String>,
        genders: Vec<Gender>,
        extractor_tag: ExtractorTag,
    ) -> Result<Self> {
        let n = vectors.nrows();
        if vectors.ncols() == 0 {
            return Err(Error::InvalidInput(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if utterance_ids.len() != n || speaker_ids.len() != n || genders.len() != n {
            return Err(Error::InvalidInput(format!(
                "metadata lengths ({}, {}, {}) do not match row count {}",
                utterance_ids.len(),
                speaker_ids.len(),
                genders.len(),
                n
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &utterance_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate utterance id '{id}'"
                )));
            }
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "embedding values must be finite".into(),
            ));
        }
        Ok(Self {
            vectors,
            utterance_ids,
            speaker_ids,
            genders,
            extractor_tag,
        })
    }

    /// Number of utterances (rows).
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Embedding dimension (columns).
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn utterance_ids(&self) -> &[String] {
        &self.utterance_ids
    }

    pub fn speaker_ids(&self) -> &[String] {
        &self.speaker_ids
    }

    pub fn genders(&self) -> &[Gender] {
        &self.genders
    }

    pub fn extractor_tag(&self) -> ExtractorTag {
        self.extractor_tag
    }

    /// Returns a copy with the same metadata but new coordinates. The new
    /// matrix must have the same number of rows; the dimension may differ
    /// (projections change it).
    pub fn with_vectors(&self, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "replacement has {} rows, set has {}",
                vectors.nrows(),
                self.len()
            )));
        }
        Self::new(
            vectors,
            self.utterance_ids.clone(),
            self.speaker_ids.clone(),
            self.genders.clone(),
            self.extractor_tag,
        )
    }

    /// Extracts the given rows (in the given order) into a new set.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidInput(format!(
                    "subset index {i} out of range for set of {} rows",
                    self.len()
                )));
            }
        }
        let vectors = DMatrix::from_fn(indices.len(), self.dim(), |r, c| {
            self.vectors[(indices[r], c)]
        });
        Self::new(
            vectors,
            indices.iter().map(|&i| self.utterance_ids[i].clone()).collect(),
            indices.iter().map(|&i| self.speaker_ids[i].clone()).collect(),
            indices.iter().map(|&i| self.genders[i]).collect(),
            self.extractor_tag,
        )
    }

    /// Scales every row to unit Euclidean norm. Fails on a zero-norm row,
    /// naming the utterance.
    pub fn length_normalized(&self) -> Result<Self> {
        let mut vectors = self.vectors.clone();
        for i in 0..vectors.nrows() {
            let norm = vectors.row(i).norm();
            if norm == 0.0 {
                return Err(Error::ZeroNorm {
                    id: self.utterance_ids[i].clone(),
                });
            }
            let mut row = vectors.row_mut(i);
            row /= norm;
        }
        self.with_vectors(vectors)
    }

    /// Groups row indices by speaker, in order of first appearance.
    pub fn speaker_groups(&self) -> Vec<(String, Vec<usize>)> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, spk) in self.speaker_ids.iter().enumerate() {
            match groups.get_mut(spk.as_str()) {
                Some(rows) => rows.push(i),
                None => {
                    order.push(spk.clone());
                    groups.insert(spk.as_str(), vec![i]);
                }
            }
        }
        order
            .into_iter()
            .map(|spk| {
                let rows = groups.remove(spk.as_str()).unwrap_or_default();
                (spk, rows)
            })
            .collect()
    }
}

/// Splits a set into its female and male subsets, preserving row order.
pub fn split_by_gender(set: &EmbeddingSet) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let female: Vec<usize> = (0..set.len())
        .filter(|&i| set.genders()[i] == Gender::Female)
        .collect();
    let male: Vec<usize> = (0..set.len())
        .filter(|&i| set.genders()[i] == Gender::Male)
        .collect();
    Ok((set.subset(&female)?, set.subset(&male)?))
}

/// Two sets with an explicit row correspondence. The pairing is a bijection
/// between a subset of source rows and a subset of target rows.
#[derive(Debug, Clone)]
pub struct PairedSets<'a> {
    source: &'a EmbeddingSet,
    target: &'a EmbeddingSet,
    pairing: Vec<(usize, usize)>,
}

impl<'a> PairedSets<'a> {
    /// Builds a paired view after checking that the pairing is a bijection
    /// within bounds on both sides.
    pub fn new(
        source: &'a EmbeddingSet,
        target: &'a EmbeddingSet,
        pairing: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let mut src_seen = HashSet::with_capacity(pairing.len());
        let mut tgt_seen = HashSet::with_capacity(pairing.len());
        for &(i, j) in &pairing {
            if i >= source.len() || j >= target.len() {
                return Err(Error::InvalidInput(format!(
                    "pair ({i}, {j}) out of range for sets of {} and {} rows",
                    source.len(),
                    target.len()
                )));
            }
            if !src_seen.insert(i) || !tgt_seen.insert(j) {
                return Err(Error::InvalidInput(format!(
                    "pairing is not a bijection: row repeated in pair ({i}, {j})"
                )));
            }
        }
        Ok(Self {
            source,
            target,
            pairing,
        })
    }

    pub fn source(&self) -> &EmbeddingSet {
        self.source
    }

    pub fn target(&self) -> &EmbeddingSet {
        self.target
    }

    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    pub fn len(&self) -> usize {
        self.pairing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairing.is_empty()
    }

    /// Materializes the paired rows as two matrices whose rows correspond.
    pub fn paired_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_fn(self.pairing.len(), self.source.dim(), |r, c| {
            self.source.vectors()[(self.pairing[r].0, c)]
        });
        let b = DMatrix::from_fn(self.pairing.len(), self.target.dim(), |r, c| {
            self.target.vectors()[(self.pairing[r].1, c)]
        });
        (a, b)
    }
}

/// Pairs two sets by shared utterance id, in source row order. Fails if the
/// sets share no ids.
pub fn pair_by_utterance<'a>(
    source: &'a EmbeddingSet,
    target: &'a EmbeddingSet,
) -> Result<PairedSets<'a>> {
    let target_index: HashMap<&str, usize> = target
        .utterance_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| (id.as_str(), j))
        .collect();
    let pairing: Vec<(usize, usize)> = source
        .utterance_ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| target_index.get(id.as_str()).map(|&j| (i, j)))
        .collect();
    if pairing.is_empty() {
        return Err(Error::EmptyPairing);
    }
    PairedSets::new(source, target, pairing)
}

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Loads an embedding set from the text format:
///
/// ```text
/// <N> <d>
/// extractor <original|retrained>
/// <utterance_id> <speaker_id> <F|M> <v1> ... <vd>
/// ```
///
/// The extractor line is optional and defaults to `original`. Lines starting
/// with `#` and blank lines are ignored. Errors carry 1-based physical line
/// numbers.
pub fn load_embedding_set(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })?;
    parse_embedding_set(&content, path)
}

fn parse_embedding_set(content: &str, path: &Path) -> Result<EmbeddingSet> {
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
        .ok_or_else(|| format_error(path, 1, "empty file, expected '<N> <d>' header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(format_error(
            path,
            header_line,
            format!(
                "header must be '<N> <d>', found {} fields",
                fields.len()
            ),
        ));
    }
    let n: usize = fields[0].parse().map_err(|_| {
        format_error(path, header_line, format!("invalid row count '{}'", fields[0]))
    })?;
    let d: usize = fields[1].parse().map_err(|_| {
        format_error(path, header_line, format!("invalid dimension '{}'", fields[1]))
    })?;
    if n == 0 || d == 0 {
        return Err(format_error(
            path,
            header_line,
            format!("row count and dimension must be positive, found {n} and {d}"),
        ));
    }

    let mut extractor_tag = ExtractorTag::Original;
    let mut pending: Option<(usize, &str)> = None;
    match lines.next() {
        Some((line_no, line)) => {
            let mut tokens = line.split_whitespace();
            if tokens.next() == Some("extractor") {
                let tag = tokens.next().ok_or_else(|| {
                    format_error(path, line_no, "extractor line is missing its tag")
                })?;
                if tokens.next().is_some() {
                    return Err(format_error(
                        path,
                        line_no,
                        "extractor line must be 'extractor <original|retrained>'",
                    ));
                }
                extractor_tag = tag
                    .parse()
                    .map_err(|e: String| format_error(path, line_no, e))?;
            } else {
                pending = Some((line_no, line));
            }
        }
        None => {
            return Err(format_error(
                path,
                header_line,
                format!("expected {n} data rows, found none"),
            ))
        }
    }

    let mut vectors = DMatrix::zeros(n, d);
    let mut utterance_ids = Vec::with_capacity(n);
    let mut speaker_ids = Vec::with_capacity(n);
    let mut genders = Vec::with_capacity(n);
    let mut seen_ids: HashMap<String, usize> = HashMap::with_capacity(n);
    let mut row = 0usize;
    let mut last_line = header_line;

    let mut next_data = move || pending.take().or_else(|| lines.next());
    while let Some((line_no, line)) = next_data() {
        last_line = line_no;
        if row == n {
            return Err(format_error(
                path,
                line_no,
                format!("expected {n} data rows, found extra content"),
            ));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(format_error(
                path,
                line_no,
                "data row must start with '<utterance_id> <speaker_id> <F|M>'",
            ));
        }
        if tokens.len() - 3 != d {
            return Err(format_error(
                path,
                line_no,
                format!(
                    "dimension mismatch: row has {} values, header declares {d}",
                    tokens.len() - 3
                ),
            ));
        }
        let utterance_id = tokens[0].to_string();
        if let Some(first) = seen_ids.insert(utterance_id.clone(), line_no) {
            return Err(format_error(
                path,
                line_no,
                format!("duplicate utterance id '{utterance_id}' (first seen on line {first})"),
            ));
        }
        let gender: Gender = tokens[2]
            .parse()
            .map_err(|e: String| format_error(path, line_no, e))?;
        for (c, token) in tokens[3..].iter().enumerate() {
            let value: f64 = token.parse().map_err(|_| {
                format_error(path, line_no, format!("invalid value '{token}'"))
            })?;
            if !value.is_finite() {
                return Err(format_error(
                    path,
                    line_no,
                    format!("non-finite value '{token}'"),
                ));
            }
            vectors[(row, c)] = value;
        }
        utterance_ids.push(utterance_id);
        speaker_ids.push(tokens[1].to_string());
        genders.push(gender);
        row += 1;
    }
    if row < n {
        return Err(format_error(
            path,
            last_line,
            format!("expected {n} data rows, found {row}"),
        ));
    }

    EmbeddingSet::new(vectors, utterance_ids, speaker_ids, genders, extractor_tag)
}

/// Writes a set in the text format. Values use the shortest decimal
/// representation that round-trips exactly, so save/load is lossless.
pub fn save_embedding_set(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if set.is_empty() {
        return Err(Error::InvalidInput(
            "cannot save an empty embedding set".into(),
        ));
    }
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", set.len(), set.dim()));
    out.push_str(&format!("extractor {}\n", set.extractor_tag()));
    for i in 0..set.len() {
        out.push_str(&format!(
            "{} {} {}",
            set.utterance_ids()[i],
            set.speaker_ids()[i],
            set.genders()[i]
        ));
        for c in 0..set.dim() {
            out.push_str(&format!(" {}", set.vectors()[(i, c)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })
}

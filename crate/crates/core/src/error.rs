use std::path::PathBuf;

/// Errors produced by the despeaker library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem access failed. The io error is part of the message, not
    /// the source chain, so wrappers do not print it twice.
    #[error("{path}: {cause}")]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },

    /// A text artifact (embedding set, rotation, PCA model, suite file) is
    /// malformed. `line` is the 1-based physical line number in the file.
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Two operands that must share a shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Paired operations found no shared utterance ids.
    #[error("no shared utterance ids between source and target sets")]
    EmptyPairing,

    /// A vector with zero norm was passed where cosine similarity is needed.
    #[error("zero-norm vector for {id}: cosine similarity is undefined")]
    ZeroNorm { id: String },

    /// An EER computation needs at least one target and one non-target score.
    #[error("degenerate score set: need at least one target and one non-target score")]
    DegenerateScores,

    /// Sinkhorn scaling produced a zero or non-finite factor. This happens
    /// when epsilon is far too small for the cost scale.
    #[error("sinkhorn underflow at iteration {iteration}: epsilon too small for cost scale")]
    SinkhornUnderflow { iteration: usize },

    /// Hardening requires a square transport plan.
    #[error("transport plan is not square ({rows}x{cols}); cannot harden to a permutation")]
    NonSquarePlan { rows: usize, cols: usize },

    /// Generic invalid argument or state.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A scenario failed; wraps the underlying error with the scenario name.
    /// The wrapped error is part of the message, not the source chain.
    #[error("scenario '{name}': {cause}")]
    Scenario {
        name: String,
        cause: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the name of the scenario it occurred in.
    pub fn in_scenario(self, name: &str) -> Error {
        Error::Scenario {
            name: name.to_string(),
            cause: Box::new(self),
        }
    }
}

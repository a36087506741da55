use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A tuple had fewer than one or more than three slots.
    Arity(usize),
    /// A tuple slot was empty after normalization.
    EmptySlot,
    /// An index was requested over zero images.
    EmptyCorpus,
    /// The same image id appeared twice where ids must be unique.
    DuplicateImage(String),
    /// An index was built from counts that violate `0 < df <= num_images`.
    InvalidIndex(String),
    /// An image id referenced by one input is missing from another.
    MissingImage(String),
    /// A unigram model with zero smoothing was asked for an unseen token.
    ZeroProbability(String),
    /// Per-token log-probabilities do not line up with the tokens.
    Alignment { expected: usize, found: usize },
    /// A candidate lacks the external token log-probabilities the selected LM needs.
    MissingTokenLogProbs { image_id: String, candidate: usize },
    /// A candidate set with no candidates.
    EmptyCandidates(String),
    /// A numeric input out of its documented domain.
    InvalidValue(String),
    /// A geometric mean input that is zero, negative or not finite.
    NonPositive(String),
    /// Pearson correlation over inputs with zero variance or too few points.
    DegenerateCorrelation,
    /// A judgement record with no references.
    EmptyReferences(String),
    /// A detection class missing from the class frequency table.
    UnknownClass(String),
    /// A config or lexicon line that could not be parsed.
    Parse { line: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Arity(n) => write!(f, "tuple arity {n} outside 1..=3"),
            Error::EmptySlot => f.write_str("tuple slot is empty after normalization"),
            Error::EmptyCorpus => f.write_str("empty corpus"),
            Error::DuplicateImage(id) => write!(f, "duplicate image id {id:?}"),
            Error::InvalidIndex(msg) => write!(f, "invalid index: {msg}"),
            Error::MissingImage(id) => write!(f, "image id {id:?} missing from ground truth"),
            Error::ZeroProbability(tok) => write!(f, "zero-probability token {tok:?}"),
            Error::Alignment { expected, found } => {
                write!(f, "alignment error: expected {expected} token log-probs, found {found}")
            }
            Error::MissingTokenLogProbs { image_id, candidate } => write!(
                f,
                "image {image_id:?} candidate {candidate} has no token log-probs but the LM needs them"
            ),
            Error::EmptyCandidates(id) => write!(f, "image {id:?} has no candidates"),
            Error::InvalidValue(msg) => write!(f, "invalid value: {msg}"),
            Error::NonPositive(name) => write!(f, "metric {name:?} must be positive for the geometric mean"),
            Error::DegenerateCorrelation => f.write_str("degenerate correlation input"),
            Error::EmptyReferences(id) => write!(f, "judgement for image {id:?} has no references"),
            Error::UnknownClass(c) => write!(f, "class {c:?} missing from class frequency table"),
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl core::error::Error for Error {}

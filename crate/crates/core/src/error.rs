use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("free Lie algebra of dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("word length {len} exceeds the level cap {cap}")]
    LevelCap { len: usize, cap: usize },

    #[error("level-0 coefficient is {0}, expected 1")]
    NotGroupLike(f64),

    #[error("series is not a Lie element (residual {0:e})")]
    NotPrimitive(f64),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rejection sampler exhausted {proposals} proposals (acceptance rate {rate:e})")]
    IterationCap { proposals: u64, rate: f64 },

    #[error("mcmc acceptance rate {0:.3} outside [0.1, 0.6] after adaptation")]
    NonConvergence(f64),

    #[error("integration blew up on segment {segment}")]
    IntegrationBlowUp { segment: usize },

    #[error("bracket span never reaches full rank up to level {0}")]
    HypothesisFailure(usize),

    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_sample(self, index: usize) -> Error {
        match self {
            e @ Error::Sample { .. } => e,
            e => Error::Sample { index, source: Box::new(e) },
        }
    }
}

use std::fmt;

use brownloop_core::Error as CoreError;

/// Every failure the binary reports. `Display` renders a single
/// `key=value` line so scripts can parse it.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("error kind=io file={path:?} msg={msg:?}")]
    Io { path: String, msg: String },

    #[error("error kind=parse file={file:?} line={line} msg={msg:?}")]
    Parse { file: String, line: usize, msg: String },

    #[error("error kind=config file={file:?} line={line} key={key:?} msg={msg:?}")]
    Config { file: String, line: usize, key: String, msg: String },

    #[error("error kind=usage msg={0:?}")]
    Usage(String),

    #[error("error kind=core variant={} msg={:?}", variant(.0), .0.to_string())]
    Core(#[from] CoreError),

    #[error("error kind=verify failed={0}")]
    VerifyFailed(usize),
}

fn variant(e: &CoreError) -> &'static str {
    match e {
        CoreError::DimensionMismatch(_) => "dimension_mismatch",
        CoreError::DimensionCap { .. } => "dimension_cap",
        CoreError::LevelCap { .. } => "level_cap",
        CoreError::NotGroupLike(_) => "not_group_like",
        CoreError::NotPrimitive(_) => "not_primitive",
        CoreError::InvalidPath(_) => "invalid_path",
        CoreError::InvalidArgument(_) => "invalid_argument",
        CoreError::IterationCap { .. } => "iteration_cap",
        CoreError::NonConvergence(_) => "non_convergence",
        CoreError::IntegrationBlowUp { .. } => "integration_blow_up",
        CoreError::HypothesisFailure(_) => "hypothesis_failure",
        CoreError::Sample { source, .. } => variant(source),
    }
}

impl CliError {
    pub fn io(path: impl fmt::Display, e: std::io::Error) -> Self {
        CliError::Io { path: path.to_string(), msg: e.to_string() }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

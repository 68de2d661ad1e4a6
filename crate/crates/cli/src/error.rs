use entrograph::coding::CodingError;
use entrograph::entropy::EntropyError;
use entrograph::growth::GrowthError;
use entrograph::systems::SystemError;
use thiserror::Error;

/// Failures of a CLI run, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("invalid config: {0}")]
    Config(String),
    /// A rendered expression error, caret line included.
    #[error("{0}")]
    Parse(String),
    #[error("family: {0}")]
    Family(String),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("{0}")]
    Run(String),
    #[error("cannot write {path}: {reason}")]
    Io { path: String, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownSystem(_) => 3,
            CliError::Config(_) | CliError::Parse(_) | CliError::UnknownSuite(_) | CliError::Io { .. } => 4,
            CliError::Family(_) => 5,
            CliError::Run(_) => 1,
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::UnknownSystem(s) => CliError::UnknownSystem(s),
            SystemError::UnknownCompact { .. } | SystemError::InvalidParameter(_) | SystemError::Uniformity(_) => {
                CliError::Config(e.to_string())
            }
            e => CliError::Run(e.to_string()),
        }
    }
}

impl From<EntropyError> for CliError {
    fn from(e: EntropyError) -> Self {
        match e {
            EntropyError::System(s) => s.into(),
            EntropyError::Uniformity(_)
            | EntropyError::NoLevels
            | EntropyError::UnknownSelector(_)
            | EntropyError::HorizonZero
            | EntropyError::EmptyCompact(_)
            | EntropyError::NotInvertible(_) => CliError::Config(e.to_string()),
            e => CliError::Run(e.to_string()),
        }
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Parse(p) => CliError::Parse(p.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<CodingError> for CliError {
    fn from(e: CodingError) -> Self {
        match e {
            CodingError::System(s) => s.into(),
            CodingError::Entropy(s) => s.into(),
            e => CliError::Family(e.to_string()),
        }
    }
}

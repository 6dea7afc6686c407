use attrilens::descriptors::DescriptorError;
use attrilens::grpo::GrpoError;
use attrilens::mlpipe::MlError;
use attrilens::policysim::SimError;
use attrilens::response::CorpusError;
use attrilens::rewards::RewardError;
use thiserror::Error;

/// Command failure, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input data.
    #[error("input error: {0}")]
    Input(String),
    /// Bad flags, config files or missing range tables.
    #[error("configuration error: {0}")]
    Config(String),
    /// A library invariant broke at run time.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::TableMissing(_) => CliError::Config(format!("TableMissing: {e}")),
            RewardError::Parse { .. } | RewardError::UnknownDescriptor { .. } => {
                CliError::Config(format!("range table {e}"))
            }
            RewardError::Io { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(format!("corpus {e}"))
    }
}

impl From<DescriptorError> for CliError {
    fn from(e: DescriptorError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GrpoError> for CliError {
    fn from(e: GrpoError) -> Self {
        match e {
            GrpoError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Config(e.to_string()),
            SimError::Reward(r) => r.into(),
            SimError::Grpo(g) => g.into(),
            SimError::Dataset(_) | SimError::Io { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<MlError> for CliError {
    fn from(e: MlError) -> Self {
        match e {
            MlError::BadFractions => CliError::Config(e.to_string()),
            MlError::LengthMismatch { .. } | MlError::ModelFormat(_) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("encode error: column `{column}`: {reason}")]
    Encode { column: String, reason: String },

    #[error("decode error: column `{column}`: {reason}")]
    Decode { column: String, reason: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("optimizer error: non-finite gradient in parameter block `{block}`")]
    Optimizer { block: String },

    #[error("numeric abort: non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("eval error: {0}")]
    Eval(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 2 usage/config, 3 data, 4 numeric abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Optimizer { .. } | Error::NonFiniteLoss { .. } => 4,
            _ => 3,
        }
    }

    /// Short machine-readable category used as the prefix of CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Encode { .. } => "encode",
            Error::Decode { .. } => "decode",
            Error::Dimension(_) => "dimension",
            Error::Contract(_) => "contract",
            Error::Optimizer { .. } => "optimizer",
            Error::NonFiniteLoss { .. } => "numeric",
            Error::Config(_) => "config",
            Error::ModelFormat(_) => "model",
            Error::Eval(_) => "eval",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Harness(#[from] standin::Error),

    #[error(transparent)]
    Traffic(#[from] standin_traffic::TrafficError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("report encoding failed: {0}")]
    Encode(String),
}

impl CampaignError {
    pub fn config(msg: impl Into<String>) -> Self {
        CampaignError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CampaignError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CampaignError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = CampaignError> = std::result::Result<T, E>;

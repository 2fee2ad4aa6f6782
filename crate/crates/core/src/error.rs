use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("graphml error: {0}")]
    Graphml(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("conflicting seed labels: {}", .0.join("; "))]
    SeedConflict(Vec<String>),

    #[error("eigenvector centrality did not converge on network `{network}` after {iterations} iterations")]
    NonConvergence { network: String, iterations: usize },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("missing upstream artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

/// Errors produced anywhere in the workbench.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite {what} (component `{component}` = {value})")]
    NonFinite {
        what: &'static str,
        component: &'static str,
        value: f64,
    },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("environment: {0}")]
    Env(String),

    #[error("reference profile: {0}")]
    Profile(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("replay cache: {0}")]
    Replay(String),

    #[error("riccati solver: {message} (residual history: {residuals:?})")]
    Riccati {
        message: String,
        residuals: Vec<f64>,
    },

    #[error("training aborted at episode {episode}, step {step}: {message}")]
    TrainingAborted {
        episode: usize,
        step: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short category tag used by the CLI on its error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) | Error::Config(_) => "config",
            Error::NonFinite { .. } | Error::Riccati { .. } => "numeric",
            Error::Shape { .. } => "shape",
            Error::Env(_) => "env",
            Error::Profile(_) | Error::Parse { .. } => "input",
            Error::Replay(_) => "replay",
            Error::TrainingAborted { .. } => "training",
            Error::Checkpoint(_) | Error::MissingArtifact { .. } => "artifact",
            Error::Metrics(_) => "metrics",
            Error::Io { .. } | Error::Csv(_) => "io",
        }
    }

    /// Process exit code for the category.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "input" => 3,
            "artifact" => 4,
            "io" => 5,
            "numeric" | "training" => 6,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch between tensors, layers, or inputs.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid argument (empty batch, out-of-range index, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// The SGLD sampler produced a non-finite gradient.
    #[error("sampler error at iteration {iteration}: {message}")]
    Sampler { iteration: usize, message: String },

    /// Malformed checkpoint / dataset / metrics file.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    /// I/O failure, tagged with the pipeline stage that hit it.
    #[error("io error during {stage}: {source}")]
    Io {
        stage: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }

    pub fn io(stage: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            stage: stage.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

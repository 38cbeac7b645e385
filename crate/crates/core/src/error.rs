use std::path::PathBuf;

use thiserror::Error;

/// Which DHQI sub-measure failed while scoring a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Render,
    Affinity,
    Naturalness,
    Geometry,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Component::Render => "render",
            Component::Affinity => "semantic affinity",
            Component::Naturalness => "spatial naturalness",
            Component::Geometry => "geometry loss",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: {kind} index {index} out of range (have {len})")]
    IndexOutOfRange {
        path: PathBuf,
        line: usize,
        kind: &'static str,
        index: i64,
        len: usize,
    },
    #[error("texture {texture} declared by {path} could not be found")]
    MissingTexture { path: PathBuf, texture: PathBuf },
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error("mesh has no interior edges")]
    NoInteriorEdges,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("embedding provider failed{}: {msg}", view.as_ref().map(|v| format!(" on view {v}")).unwrap_or_default())]
    Provider { view: Option<String>, msg: String },
    #[error("{component} failed: {source}")]
    Component {
        component: Component,
        #[source]
        source: Box<Error>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_component(self, component: Component) -> Self {
        Error::Component {
            component,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("path has no nodes")]
    EmptyPath,
    #[error("route set is empty")]
    EmptySet,
    #[error("ecdf of an empty sample")]
    EmptyInput,
    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("invalid geo-path: {0}")]
    InvalidPath(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid counts: {ip_routes} routes, {clusters} clusters")]
    InvalidCounts { ip_routes: usize, clusters: usize },
    #[error("{}line {line}: {reason}", source_prefix(.file))]
    Parse {
        file: Option<PathBuf>,
        line: usize,
        reason: String,
    },
    #[error("{}line {line}: invalid address {value:?}", source_prefix(.file))]
    InvalidAddress {
        file: Option<PathBuf>,
        line: usize,
        value: String,
    },
    #[error("{}row {row}: duplicate cidr {cidr}", source_prefix(.file))]
    DuplicateCidr {
        file: Option<PathBuf>,
        row: usize,
        cidr: String,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn source_prefix(file: &Option<PathBuf>) -> String {
    match file {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

impl Error {
    /// True for errors caused by bad input files or arguments, as opposed to
    /// internal failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Serialize(_))
    }

    /// Attaches a file name to line-level parse errors.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        let path = Some(path.into());
        match self {
            Error::Parse { line, reason, .. } => Error::Parse { file: path, line, reason },
            Error::InvalidAddress { line, value, .. } => Error::InvalidAddress { file: path, line, value },
            Error::DuplicateCidr { row, cidr, .. } => Error::DuplicateCidr { file: path, row, cidr },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error in {file}: missing required column `{column}`")]
    Schema { file: String, column: String },

    #[error("schema error in {file} at row {row}: {reason}")]
    Row {
        file: String,
        row: usize,
        reason: String,
    },

    #[error("duplicate video_id `{0}` in manifest")]
    DuplicateVideo(String),

    #[error("unresolvable party labels for rows: {}", .0.join(", "))]
    Join(Vec<String>),

    #[error("fetch failed for {video_id} ({url}): {reason}")]
    FetchRetriable {
        video_id: String,
        url: String,
        reason: String,
    },

    #[error("video {video_id} is permanently unavailable: {reason}")]
    FetchPermanent { video_id: String, reason: String },

    #[error("media error for {path}: {reason}")]
    Media { path: PathBuf, reason: String },

    #[error("no decodable frames in {0}")]
    EmptyVideo(PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("crop error: {0}")]
    Crop(String),

    #[error("verification manifest error: {0}")]
    Manifest(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("image error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// I/O failures surfacing through the CSV reader are reported as I/O.
    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        if source.is_io_error() {
            if let csv::ErrorKind::Io(e) = source.into_kind() {
                return Error::io(path, e);
            }
            unreachable!("is_io_error implies an Io kind");
        }
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for configuration-class failures (exit code 2 in the CLI).
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Model(_))
    }
}

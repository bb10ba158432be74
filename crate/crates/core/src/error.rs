use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported audio format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("corrupt WAV header in {path}: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid sample rate: {0}")]
    InvalidRate(f64),
    #[error("invalid time-scale factor {0} (|k| must lie in [1, 8])")]
    InvalidFactor(f64),
    #[error("empty clip")]
    EmptyClip,
    #[error("empty kernel")]
    EmptyKernel,
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty spectrogram")]
    EmptySpectrogram,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty curve")]
    EmptyCurve,
    #[error("clip of {len} samples is longer than the target {target}")]
    TooLong { len: usize, target: usize },
    #[error("signal has zero power")]
    SilentSignal,
    #[error("noise has zero power")]
    SilentNoise,
    #[error("empty noise clip")]
    EmptyNoise,
    #[error("asset not found in manifest: {0}")]
    AssetNotFound(String),
    #[error("empty list: {0}")]
    EmptyList(&'static str),
    #[error("scenario {0} has no vocalizations or no noises")]
    EmptyScenario(String),
    #[error("reference signal is all zero")]
    ZeroReference,
    #[error("no scores to aggregate")]
    EmptyScores,
    #[error("excerpt id sets differ: {0}")]
    IdSetMismatch(String),
    #[error("backend `{backend}` failed: {reason}")]
    BackendFailure { backend: String, reason: String },
    #[error("backend `{backend}` timed out after {seconds} s")]
    Timeout { backend: String, seconds: f64 },
    #[error("every ensemble estimate is silent")]
    AllSilent,
    #[error("impulse-response pool is empty")]
    EmptyRirPool,
    #[error("asset root is empty or unreadable: {0}")]
    EmptyRoot(PathBuf),
    #[error("missing clean reference for {0}")]
    MissingReference(String),
    #[error("reports are not comparable: {0}")]
    ManifestMismatch(String),
    #[error("report is internally inconsistent: {0}")]
    Inconsistent(String),
    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem or malformed input files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::FileNotFound(_)
                | Error::UnsupportedFormat { .. }
                | Error::CorruptHeader { .. }
                | Error::Io { .. }
                | Error::EmptyRoot(_)
                | Error::Manifest { .. }
                | Error::MissingReference(_)
        )
    }

    /// True for failures raised by a denoiser backend.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::BackendFailure { .. } | Error::Timeout { .. })
    }
}

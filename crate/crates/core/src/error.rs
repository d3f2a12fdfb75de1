use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,

    #[error("invalid STFT configuration: {0}")]
    InvalidStftConfig(String),

    #[error("window overlap-add normalisation is near zero at sample {sample} (sum {sum:e})")]
    WindowNormalization { sample: usize, sum: f64 },

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid microphone pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough frames: need more than {needed}, got {actual}")]
    TooFewFrames { needed: usize, actual: usize },

    #[error("singular normal equations at frequency bin {bin}")]
    SingularSystem { bin: usize },

    #[error("invalid room scene: {0}")]
    InvalidScene(String),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("{0} has zero energy")]
    SilentComponent(&'static str),

    #[error("signal too short: need at least {needed} samples, got {actual}")]
    SignalTooShort { needed: usize, actual: usize },

    #[error("missing ground truth: {0}")]
    MissingGroundTruth(String),

    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),

    #[error("bad file format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("WAV error: {0}")]
    Wav(#[from] hound::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

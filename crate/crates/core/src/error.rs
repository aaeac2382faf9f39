use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("unsupported encoding: format tag {format_tag}, {bits_per_sample} bits per sample (16-bit PCM required)")]
    UnsupportedEncoding {
        format_tag: u16,
        bits_per_sample: u16,
    },
    #[error("unsupported channel count: {0} (mono required)")]
    UnsupportedChannels(u16),
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("sample rate mismatch: {expected} Hz vs {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },

    #[error("empty input")]
    EmptyInput,
    #[error("silent donor segment")]
    SilentDonor,
    #[error("span [{start}, {end}) out of bounds for buffer of {len} samples")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("alignment exceeds audio: span [{start}, {end}) but audio has {len} samples")]
    AlignmentExceedsAudio {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("interval rounds to an empty span ({start_s} s + {duration_s} s at {rate} Hz)")]
    EmptySpan {
        start_s: f64,
        duration_s: f64,
        rate: u32,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    InvalidData(String),
    #[error("unknown phone label {0:?}")]
    UnknownPhone(String),

    #[error("segment too short: {len} frames (minimum {min})")]
    SegmentTooShort { len: usize, min: usize },
    #[error("invalid mask parameter: {0}")]
    InvalidMaskParam(String),

    #[error("no augmentation candidate")]
    NoCandidate,
    #[error("no distant phone available for {0:?}")]
    NoDistantPhone(String),
    #[error("empty GOP bank for donor phone {0:?}")]
    EmptyBank(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

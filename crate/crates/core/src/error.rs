use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("all entries are zero")]
    AllZero,
    #[error("input too short: need at least {need}, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("class index {class} out of range for {num_classes} classes")]
    InvalidClass { class: usize, num_classes: usize },
    #[error("cannot randomise {k} layers: model has {available} parameterized layers")]
    KTooLarge { k: usize, available: usize },
    #[error("unsupported architecture: {0}")]
    UnsupportedArchitecture(String),
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
    #[error("shape inconsistency: {0}")]
    ShapeInconsistency(String),
    #[error("index {index} out of range for {len} features")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid patch size {0}")]
    InvalidPatchSize(usize),
    #[error("mask is empty")]
    EmptyMask,
    #[error("mask covers every feature")]
    FullMask,
    #[error("attribution has no positive mass")]
    NoPositiveAttribution,
    #[error("attribution is all zero")]
    AllZeroAttribution,
    #[error("reference explanation has zero norm")]
    ZeroNormExplanation,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("plan validation failed: {0}")]
    PlanValidation(String),
    #[error("ranking needs at least two explainers, got {0}")]
    FewerThanTwoExplainers(usize),
    #[error("unknown parameter path `{0}`")]
    UnknownParamPath(String),
    #[error("value `{value}` is not compatible with parameter `{param}` ({expected})")]
    TypeIncompatibleValue {
        param: String,
        value: String,
        expected: String,
    },
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used when a per-sample failure is recorded in a report.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DegenerateVariance(_) => "DegenerateVariance",
            Error::SingleClass => "SingleClass",
            Error::AllZero => "AllZero",
            Error::TooShort { .. } => "TooShort",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::InvalidTensor(_) => "InvalidTensor",
            Error::InvalidClass { .. } => "InvalidClass",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::UnsupportedArchitecture(_) => "UnsupportedArchitecture",
            Error::Parse { .. } => "ParseError",
            Error::ShapeInconsistency(_) => "ShapeInconsistency",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InvalidPatchSize(_) => "InvalidPatchSize",
            Error::EmptyMask => "EmptyMask",
            Error::FullMask => "FullMask",
            Error::NoPositiveAttribution => "NoPositiveAttribution",
            Error::AllZeroAttribution => "AllZeroAttribution",
            Error::ZeroNormExplanation => "ZeroNormExplanation",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::PlanValidation(_) => "PlanValidation",
            Error::FewerThanTwoExplainers(_) => "FewerThanTwoExplainers",
            Error::UnknownParamPath(_) => "UnknownParamPath",
            Error::TypeIncompatibleValue { .. } => "TypeIncompatibleValue",
            Error::BadMagic(_) => "BadMagic",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::BadHeader(_) => "BadHeader",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::Io { .. } => "Io",
        }
    }

    /// True for failures caused by degenerate numbers rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVariance(_)
                | Error::AllZero
                | Error::AllZeroAttribution
                | Error::NoPositiveAttribution
                | Error::ZeroNormExplanation
                | Error::SingleClass
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

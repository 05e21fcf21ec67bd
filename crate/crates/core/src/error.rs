use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spectrum: alpha = {alpha}, beta = {beta} (both must exceed 1)")]
    InvalidSpectrum { alpha: f64, beta: f64 },
    #[error("invalid dimensions: model size {model_size}, ambient dimension {ambient:?}")]
    InvalidDims {
        model_size: usize,
        ambient: Option<usize>,
    },
    #[error("invalid scale for {name}: {value}")]
    InvalidScale { name: &'static str, value: f64 },
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("too few steps for a tail-geometric schedule: T = {0}")]
    TooFewSteps(usize),
    #[error("non-finite value produced by an SGD update")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("need at least 2 points for a fit, got {0}")]
    TooFewPoints(usize),
    #[error("log-log fit requires positive values, got ({0}, {1})")]
    NonPositiveValue(f64, f64),
    #[error("all abscissae coincide; slope undefined")]
    DegenerateAbscissa,
    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

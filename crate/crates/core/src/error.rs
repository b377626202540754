use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate polarization state")]
    DegeneratePolarization,

    #[error("symbol not on PDM-QPSK SOP lattice (Stokes dot product {0})")]
    OffLattice(f64),

    #[error("invalid bit word: {0}")]
    InvalidBitWord(String),

    #[error("constellation needs at least {needed} symbols, got {got}")]
    TooFewSymbols { needed: usize, got: usize },

    #[error("index {index} out of range for constellation of {len} symbols")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate label {0:#010b} in constellation")]
    DuplicateLabel(u8),

    #[error("no label convention satisfies the PB-5B8D/PA-7B8D overhead formulas")]
    NoConvention,

    #[error("label convention is invalid for {0}")]
    InvalidConvention(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bit stream length {len} is not a multiple of {chunk}")]
    LengthMismatch { len: usize, chunk: usize },

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("equalizer diverged (step size too large): training MSE {final_mse:.3e} > initial {initial_mse:.3e}")]
    EqualizerDiverged { initial_mse: f64, final_mse: f64 },

    #[error("SSFM step not converged: halving the step changes the output by {0:.3e} (relative RMS)")]
    StepNotConverged(f64),

    #[error("no decision gain (ber = {0} >= 0.5)")]
    NoDecisionGain(f64),

    #[error("needs errors (ber = {0} <= 0)")]
    NeedsErrors(f64),

    #[error("threshold {0} dB not bracketed by the sweep")]
    ThresholdNotBracketed(f64),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

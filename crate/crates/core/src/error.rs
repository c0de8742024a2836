use thiserror::Error;

/// Errors produced by simulation, matching and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unit-uniform input {0} outside [0, 1]")]
    UnitRange(f64),

    #[error("invalid parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("setting list for {0} is empty")]
    EmptySettings(&'static str),

    #[error("unknown model id {0:?}")]
    UnknownModel(String),

    #[error("{op} does not support model {model}")]
    ModelMismatch {
        op: &'static str,
        model: crate::model::ModelId,
    },

    #[error("correlation undefined: no nonzero-outcome pairs in table")]
    UndefinedCorrelation,

    #[error("efficiency undefined: zero denominator")]
    UndefinedEfficiency,

    #[error("contrast must hold three entries of one sign and one of the other, all +/-1")]
    InvalidContrast,

    #[error("bound argument must be a ratio in (0, 1], got {0}")]
    BoundArgument(f64),

    #[error("pair count {pairs} exceeds singles count {singles}")]
    PairsExceedSingles { pairs: u64, singles: u64 },

    #[error("event stream {side} not time-sorted at event index {index}")]
    UnsortedStream { side: &'static str, index: usize },

    #[error("CHSH report requires 2x2 settings, got {n_a}x{n_b}")]
    NotChsh { n_a: usize, n_b: usize },

    #[error("setting index {index} out of range for {len} settings")]
    SettingIndex { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

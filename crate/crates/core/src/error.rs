//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: left is {left:?}, right is {right:?}")]
    DimMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("head_dim must be even, got {0}")]
    OddHeadDim(usize),

    #[error("query heads ({n_heads}) not divisible by kv heads ({n_kv_heads})")]
    HeadsNotDivisible { n_heads: usize, n_kv_heads: usize },

    #[error("attention requires at least one cached position")]
    EmptyCache,

    #[error("non-finite value in quantizer input")]
    NonFinite,

    #[error("invalid group size {0}: must be a positive multiple of 8")]
    InvalidGroupSize(usize),

    #[error("input channels ({in_channels}) not divisible by group size ({group_size})")]
    InChannelsNotDivisible {
        in_channels: usize,
        group_size: usize,
    },

    #[error("output channels ({0}) not divisible by 8")]
    OutChannelsNotDivisible(usize),

    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("alpha grid is empty")]
    EmptyAlphaGrid,

    #[error("nibble value {0} out of range 0..=15")]
    NibbleRange(u8),

    #[error("bad magic {0:02x?}: not a packed model file")]
    BadMagic([u8; 8]),

    #[error("unsupported format version {found} (reader supports {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("file truncated: need {needed} bytes at offset {offset}, file has {available}")]
    Truncated {
        offset: u64,
        needed: u64,
        available: u64,
    },

    #[error("directory inconsistent: {0}")]
    DirectoryInconsistent(String),

    #[error("corrupt macro: nonzero bits in the zero-strip padding")]
    CorruptZeroPadding,

    #[error("schedule does not match tensor: {0}")]
    ScheduleMismatch(String),

    #[error("activation length {got} does not match tensor input channels {expected}")]
    ActivationLength { expected: usize, got: usize },

    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("token {token} out of range for vocab size {vocab_size}")]
    TokenOutOfRange { token: u32, vocab_size: usize },

    #[error("kv cache overflow: capacity {max_seq} reached")]
    CacheOverflow { max_seq: usize },

    #[error("prompt is empty")]
    EmptyPrompt,

    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f32),

    #[error("score ratio {name} must have positive values, got {candidate}/{max}")]
    InvalidRatio {
        name: &'static str,
        candidate: f64,
        max: f64,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("block width {0} outside the supported range 6..=16")]
    WidthOutOfRange(u32),
    #[error("{poly:#x} is not an irreducible polynomial of degree {width}")]
    ReducibleModulus { width: u32, poly: u32 },
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueOutOfRange { value: u32, width: u32 },
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("table is not a permutation of 0..2^{0}")]
    NotAPermutation(u32),
    #[error("message needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("operation requires {expected} blocks, got {got}")]
    WrongBlockCount { expected: &'static str, got: usize },
    #[error("nonce {0:#x} derives a zero secret mask; choose another nonce")]
    DegenerateNonce(u32),
    #[error("basis has rank {rank}, need {needed} for a one-dimensional null space")]
    RankDeficient { rank: usize, needed: usize },
    #[error("truth table has {got} entries, expected {expected}")]
    TableLength { got: usize, expected: usize },
    #[error("period recovery failed: {0}")]
    PeriodNotFound(&'static str),
    #[error("operation needs a ciphertext-input oracle")]
    WrongOracleMode,
    #[error("key recovery did not complete")]
    IncompleteRecovery,
}

pub type Result<T> = std::result::Result<T, Error>;

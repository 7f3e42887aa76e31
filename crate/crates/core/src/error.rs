use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are split by how the CLI should exit: anything that reflects bad
/// input, resource caps, or I/O is an operational failure (exit 2), while
/// `VerdictFailed` is reserved for computations that completed but contradicted
/// an expected mathematical outcome (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("unsupported matrix dimension {0} (supported: 2, 3, 4)")]
    BadDimension(usize),
    #[error("unsupported modulus {0} (supported: 1..=256)")]
    BadModulus(i64),
    #[error("matrix is not invertible: determinant {det} is not a unit mod {modulus}")]
    NotInvertible { det: u32, modulus: u32 },
    #[error("matrix is not unimodular: determinant {det} != 1 mod {modulus}")]
    NotUnimodular { det: u32, modulus: u32 },
    #[error("elementary matrix requires distinct row and column, got ({0},{0})")]
    DiagonalShift(usize),
    #[error("index ({0},{1}) out of range for a {2}x{2} matrix")]
    IndexOutOfRange(usize, usize, usize),
    #[error("level {0} is not a prime power")]
    NotAPrimePower(u32),
    #[error("bad level: {0}")]
    BadLevel(String),
    #[error("enumeration cap {cap} exceeded (closure reached {reached} elements)")]
    CapExceeded { cap: usize, reached: usize },
    #[error("unknown subgroup name `{0}`")]
    UnknownSubgroup(String),
    #[error("subgroup too large for this operation: {size} > {limit}")]
    SubgroupTooLarge { size: usize, limit: usize },
    #[error("no prime l = 1 mod {e} with l > {min} found below 2^31")]
    FieldSearchExhausted { e: u64, min: u64 },
    #[error("character-table eigenspace splitting failed: {0}")]
    SplitFailed(String),
    #[error("lift out of range: {0}")]
    LiftFailed(String),
    #[error("representation images of commuting elements fail to commute (max deviation {0:.3e})")]
    NonCommuting(f64),
    #[error("bad representation descriptor: {0}")]
    BadDescriptor(String),
    #[error("bad group spec: {0}")]
    BadGroupSpec(String),
    #[error("dimension {0} exceeds the dense-solver cap {1}")]
    DimensionCap(usize, usize),
    #[error("character label vector must be nonzero mod {0}")]
    ImprimitiveLabel(u32),
    #[error("n_max {0} out of range: need 1 <= n_max <= {1}")]
    MomentIndexOutOfRange(usize, usize),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("group cache at {path}: {reason}")]
    BadCache { path: String, reason: String },
    #[error("internal assertion failed: {0}")]
    Internal(String),
    #[error("mathematical verdict failed: {0}")]
    VerdictFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

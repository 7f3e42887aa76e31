//! Every floating-point threshold used by the toolkit, in one place.
//!
//! The exact layers (modular arithmetic, character tables, counting) use no
//! tolerances at all; these constants only govern the dense linear algebra
//! around concrete unitary representations, where permutation matrices keep
//! the conditioning benign.

/// Residual allowed on eigen-equations and invariance checks,
/// e.g. max over h of ||rho(h)w - w||.
pub const RESIDUAL: f64 = 1e-8;

/// Entrywise deviation allowed when checking rho(g)rho(h) = rho(gh)
/// and rho(g)rho(g)* = I on sampled elements.
pub const UNITARITY: f64 = 1e-10;

/// Orthonormality and completeness of computed subspace bases.
pub const BASIS_ORTHO: f64 = 1e-10;

/// Acceptable distance between a computed unitary eigenvalue and the nearest
/// exact root of unity when recovering integer character labels.
pub const LABEL_ROUNDING: f64 = 1e-6;

/// Entrywise threshold for "this group element acts nontrivially".
pub const NONTRIVIAL_ACTION: f64 = 1e-6;

/// Gram-matrix eigenvalue threshold for numeric rank, applied before the
/// exact integer assertion on the resulting rank.
pub const GRAM_RANK: f64 = 1e-6;

/// Deviation allowed on projector idempotence and self-adjointness.
pub const PROJECTOR: f64 = 1e-8;

/// Half-gap rule for counting projector eigenvalues: a spectral value above
/// this is counted as 1, below as 0 (averaging projectors have eigenvalues
/// exponentially close to {0,1}).
pub const PROJECTOR_RANK_CUT: f64 = 0.5;

/// Tolerance on operator-norm comparisons against the exact value 4.
pub const NORM: f64 = 1e-9;

/// Slack allowed in the "nondecreasing" check on moment lower bounds
/// (the underlying integers are exact; this only covers the final powf).
pub const MONOTONE_SLACK: f64 = 1e-12;

/// A lower-bound sequence is reported as plateaued when successive
/// differences drop below this window.
pub const PLATEAU_WINDOW: f64 = 0.05;

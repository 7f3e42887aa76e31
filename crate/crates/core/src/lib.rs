//! Exact and numerical machinery for verifying that finite-dimensional
//! unitary representations of SL4(Z/N) carry SL2-block-invariant vectors,
//! and for quantifying the operator-norm obstruction that this produces.

pub mod cyclotomic;
pub mod dixon;
pub mod invcount;
pub mod linalg;
pub mod error;
pub mod fp;
pub mod grpstore;
pub mod modring;
pub mod pipeline;
pub mod report;
pub mod reps;
pub mod strongconv;
pub mod tolerances;

pub use error::{Error, Result};
pub mod cli;

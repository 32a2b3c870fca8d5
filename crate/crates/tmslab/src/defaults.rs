//! Central table of numeric defaults.
//!
//! Every tolerance or cap used anywhere in the crate is pinned here, so the
//! acceptance suite and the CLI agree on one set of constants.
//!
//! | constant                | value | used by                                |
//! |-------------------------|-------|----------------------------------------|
//! | `EIGEN_TOL`             | 1e-13 | power iteration stopping               |
//! | `EIGEN_MAX_ITERS`       | 1e6   | power iteration cap                    |
//! | `ROOT_TOL`              | 1e-8  | generating-function and p' root solves |
//! | `FD_STEP`               | 1e-4  | central finite differences             |
//! | `ENUMERATION_CAP`       | 64    | cycle/loop enumeration depth           |
//! | `BRACKET_LIMIT`         | 500   | |t| cap when bracketing p'(t)=a        |
//! | `COV_TRUNCATION`        | 1e4   | truncated covariance cross-check       |

/// Relative tolerance for the power-iteration eigensolver.
pub const EIGEN_TOL: f64 = 1e-13;

/// Iteration cap for the power-iteration eigensolver.
pub const EIGEN_MAX_ITERS: usize = 1_000_000;

/// Absolute residual tolerance for scalar root finding.
pub const ROOT_TOL: f64 = 1e-8;

/// Base step for central finite differences (one Richardson level on top).
pub const FD_STEP: f64 = 1e-4;

/// Default cap on cycle lengths in exact enumeration and counting.
pub const ENUMERATION_CAP: usize = 64;

/// Cap on |t| while growing a bracket for p'(t) = a.
pub const BRACKET_LIMIT: f64 = 500.0;

/// Truncation index for the summed-covariance variance cross-check.
pub const COV_TRUNCATION: usize = 10_000;

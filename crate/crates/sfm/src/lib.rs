//! Submodular function minimization by projected subgradient descent on
//! the Lovász extension, with incremental subgradient maintenance.
//!
//! The crate is organized around one run = one instance + one
//! [`oracle::CountingOracle`]:
//!
//! - [`oracle`]: instance types (directed cuts, explicit tables, the
//!   query-complexity gadget), file formats, and query counting.
//! - [`lovasz`]: consistent permutations, extension values, subgradients,
//!   and prefix-set rounding.
//! - [`gradmaint`]: the order-maintenance tree that keeps a point, its
//!   consistent permutation, and the subgradient along it, under sparse
//!   edits; also the one-point estimator for subgradient differences.
//! - [`descent`]: projections, step schedules, and the generic descent
//!   driver.
//! - [`algorithms`]: the end-to-end minimizers (exact, sampled
//!   approximate, cardinality-capped variants, multiplicative wrapper,
//!   min-cut specialization).
//! - [`lowerbound`]: the recognizer simulation behind the n/4 query
//!   lower bound for subgradient-based strategies.
//! - [`verify`]: independent exhaustive oracles used by the test suite.
//!
//! Ground-set elements are `0..n` throughout the library; file formats
//! and the CLI use 1-based element ids at the boundary.

pub mod algorithms;
pub mod descent;
pub mod error;
pub mod gradmaint;
pub mod lovasz;
pub mod lowerbound;
pub mod oracle;
pub mod verify;

pub use error::{Error, Result};

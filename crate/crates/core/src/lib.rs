//! Exact-arithmetic interpreter and analysis toolkit for additive real
//! BSS RAMs (register machines over the reals with `+`, `-`, constants
//! 0 and 1, equality/order tests, index registers, and optional oracle
//! tests).
//!
//! The crate is organized around the pieces such a toolkit needs:
//!
//! - [`reals`]: exact values from the rational span of `{1, sqrt(p_1),
//!   sqrt(p_2), ..., pi}` with symbolic zero tests and interval-based
//!   sign determination. No floating point participates in semantics.
//! - [`machine`]: programs, the assembly text format, dialect checking,
//!   and single-step operational semantics including oracle queries.
//! - [`encoding`]: the bit-level program code, the machine index
//!   `K = 2^|code| + c`, and the total machine enumeration with trivial
//!   fill-ins.
//! - [`simulation`]: dovetailed enumeration of halting pairs over the
//!   positive integers, enumerator outputs, bounded snapshots `W_{i,s}`,
//!   and diagonal halting queries.
//! - [`priority`]: the finite-stage priority construction of a simple,
//!   low set `A` of positive integers, with its query-bound bookkeeping
//!   and the witness machine builders.
//! - [`problems`]: decision problems over the reals (rationality, affine
//!   rational dependence, the prime square-root family and its halting
//!   problems) plus affine path-constraint extraction and rational
//!   shadow search.

pub mod encoding;
pub mod machine;
mod primes;
pub mod priority;
pub mod problems;
pub mod reals;
pub mod simulation;

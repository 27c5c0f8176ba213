//! Street economic vitality diagnostics: indicator computation, anchor
//! spillover fields, entropy-weighted TOPSIS aggregation, geographically
//! weighted regression, rank statistics and brand decoding orchestration.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod brandsem;
pub mod error;
pub mod geodata;
pub mod gwr;
pub mod indicators;
pub mod scoring;
pub mod spillover;
pub mod stats;

pub use error::{Error, Result};

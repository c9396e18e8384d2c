//! Finite-element tools for the fractional Laplacian on bounded domains:
//! Galerkin assembly of the Gagliardo and deformation forms, generalized
//! eigenproblems, boundary-trace extraction and numerical checks of
//! Pohozaev-type identities.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod domain;
pub mod error;
pub mod expr;
pub mod fields;
pub mod linalg;
pub mod quad;
pub mod solve;

pub use error::{Error, Result};

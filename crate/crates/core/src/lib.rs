//! Tensor-network HHL linear-system solver.
//!
//! The HHL phase-estimation circuit, contracted classically as a tensor
//! network, with an exact qudit statevector simulation of the same circuit as
//! a cross-check, LU and conjugate-gradient references, and builders for the
//! finite-difference systems used in the experiments.

// Positive-parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod circuit;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod tn;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, C64};

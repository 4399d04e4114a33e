//! Dense/sparse matrix containers, seeded randomness, and the
//! finite-difference gradient oracle. Everything above this module builds on
//! these kernels; they are pure, deterministic, and 64-bit by default.

pub mod dense;
pub mod gradcheck;
pub mod rng;
pub mod sparse;

pub use dense::{DenseMatrix, MapFn};
pub use gradcheck::{finite_difference_gradient, max_relative_error, FD_EPSILON};
pub use rng::{sample_standard_normal, RngStream};
pub use sparse::SparseMatrix;

//! Adversarially regularized graph autoencoders.
//!
//! Learns node embeddings of an attributed graph with a two-layer GCN
//! encoder and an inner-product decoder, optionally matching the latent
//! code distribution to a Gaussian prior through an adversarial
//! discriminator (ARGA, and the variational ARVGA). The plain GAE/VGAE
//! ablations are the same models with the adversarial term disabled.
//!
//! Pipeline: [`graph`] loads citation datasets and prepares edge splits,
//! [`train`] runs the alternating optimization, and [`eval`] scores
//! embeddings on link prediction and node clustering and exports 2-D PCA
//! projections. All numeric kernels live in [`tensor`] and are generic over
//! the scalar type; the pipeline itself runs on the `f64` aliases below.

pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{DenseMatrix, RngStream, SparseMatrix};

/// Dense matrix of the pipeline's working precision.
pub type Mat = DenseMatrix<f64>;

/// Sparse (CSR) matrix of the pipeline's working precision.
pub type SpMat = SparseMatrix<f64>;

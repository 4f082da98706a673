//! Self-contained dense linear algebra: the column-major matrix type, products,
//! one-sided Jacobi SVD, Haar sampling, real eigenvalues and matrix file I/O.

mod dense;
mod eigen;
mod haar;
pub mod io;
mod svd;

pub use dense::{frobenius_distance_sq, matmul, DenseMatrix, DiagonalWeights};
pub use eigen::eigenvalues;
pub use haar::{gaussian_matrix, haar_orthogonal};
pub use svd::{svd_dense, Svd, DEFAULT_MAX_SWEEPS};

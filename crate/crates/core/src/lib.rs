//! Approximation of orthonormal matrices, and of weighted principal
//! components, by short products of extended Givens transformations (plane
//! rotations and 2x2 reflectors), with fast application and error analysis.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the usual double-precision types.

pub mod analysis;
mod error;
pub mod factorizer;
pub mod fastapply;
pub mod givens2x2;
pub mod matcore;
pub mod pca;
mod rng;
mod scalar;

pub use error::{Error, Result};
pub use rng::SeededRng;
pub use scalar::Real;

pub use factorizer::{factorize, FactorizerConfig, ScoreInit, SigmaRule};
pub use givens2x2::{ExtendedGivens, GivensKind};
pub use matcore::{DenseMatrix, DiagonalWeights};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Weights = DiagonalWeights<f64>;
pub type Givens = ExtendedGivens<f64>;
pub type Product = factorizer::GivensProduct<f64>;
pub type Product32 = factorizer::GivensProduct<f32>;

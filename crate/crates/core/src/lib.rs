pub mod certify;
pub mod constants;
pub mod error;
pub mod frobenius;
pub mod matrix;
pub mod measurement;
pub mod nuclear;
pub mod quantile;
pub mod recovery;
pub mod sensing;
pub mod simlab;
pub mod seed;
pub mod tol;

pub use error::{Error, Result};
pub use matrix::{HermitianMatrix, QuantumState, SpectralDecomposition};

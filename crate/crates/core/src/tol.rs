//! Numerical tolerances shared by every module and test.

/// Hermiticity check at construction, relative to the largest entry magnitude.
pub const HERMITIAN: f64 = 1e-12;
/// Unit-trace check for density matrices.
pub const TRACE: f64 = 1e-10;
/// Smallest admissible eigenvalue of a density matrix.
pub const PSD: f64 = 1e-10;
/// Nuclear-norm bound slack for density matrices.
pub const NUCLEAR: f64 = 1e-9;
/// Largest imaginary part tolerated in `tr(X A)`, relative to its scale.
pub const IMAG: f64 = 1e-10;
/// Slack on Bernoulli success probabilities.
pub const PROBABILITY: f64 = 1e-9;
/// Relative Frobenius residual of an eigendecomposition.
pub const EIGH_RECONSTRUCTION: f64 = 1e-9;
/// Iteration cap handed to the Hermitian eigensolver.
pub const EIGH_MAX_ITERS: usize = 10_000;

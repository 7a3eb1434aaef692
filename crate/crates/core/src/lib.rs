//! Spectra and level-spacing statistics of the asymmetric quantum Rabi model
//!
//! ```text
//! H = a†a + Δσz + g(a + a†)σx + εσx      (ω = 1)
//! ```
//!
//! The crate computes convergence-certified eigenvalues of truncated
//! Hamiltonians (Sturm-sequence bisection on tridiagonal matrices, with a
//! Givens band reduction for the full two-spin problem) and builds the
//! spacing statistics on top of them: gap sets and their type
//! classification, counting functions, densities, parity proportions,
//! internal-symmetry residuals, envelope peaks and periods. Closed-form
//! asymptotic models, the constraint-polynomial determinants and a small
//! Levenberg-Marquardt fitter complete the toolbox.
//!
//! Module map:
//!
//! - [`model`]: parameters and truncated Hamiltonian matrices.
//! - [`eigensolver`]: Sturm counts, bisection and band reduction.
//! - [`spectra`]: certified spectra, parity-labelled merges.
//! - [`spacing`]: spacing sets and every statistic derived from them.
//! - [`asymptotics`]: large-n level formulas and predicted measures.
//! - [`constraint`]: determinant recurrences and zero-curve tracing.
//! - [`fitting`]: nonlinear least squares and goodness of fit.
//! - [`output`]: deterministic CSV formatting shared by the emitters.

pub mod asymptotics;
pub mod constraint;
pub mod eigensolver;
pub mod error;
pub mod fitting;
pub mod model;
pub mod output;
pub mod spacing;
pub mod spectra;

pub use error::{Error, Result};
pub use model::{BandedSymmetric, ModelParams, Parity, TridiagonalSymmetric};
pub use spectra::Spectrum;

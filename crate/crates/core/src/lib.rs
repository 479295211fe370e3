//! Zero-bias expansions of `E[h(W)]` for sums `W = X_1 + … + X_n` of
//! independent mean-zero variables.
//!
//! The crate is organised by role:
//!
//! - [`distributions`]: summand laws, zero-bias companions, samplers.
//! - [`admissible`]: test functions with exact derivative and jump structure.
//! - [`stein`]: solutions of Stein's equation and Gaussian expectations.
//! - [`expansion`]: the recursive correction terms `C_N(h)` and their error budget.
//! - [`bounds`]: concentration inequalities and Taylor remainder bounds.
//! - [`oracle`]: exact convolution, Monte Carlo and convergence-order fits.
//! - [`cli`]: configuration-driven experiment runner and report writers.

pub mod admissible;
pub mod bounds;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod expansion;
pub mod numerics;
pub mod oracle;
pub mod stein;

pub use error::{Error, Result};

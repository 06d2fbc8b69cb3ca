//! Numerical verification toolkit for polynomials in random elements.
//!
//! The crate is organised around four experiment families that share a
//! small set of domain types:
//!
//! * [`charfun`]: characteristic functions of polynomial images, the Cantor
//!   characteristic function and decay-envelope harnesses.
//! * [`vinogradov`]: exact mean-value counts `J_k(P)`, Weyl sums and the
//!   stochastic mean value `I_k(P)`.
//! * [`quadform`]: densities and tails of `|Y - a|^2` for Gaussian `Y` in a
//!   Hilbert space.
//! * [`characterization`]: quadratic-form case classification, moment
//!   machinery and characterization/stability experiments.
//!
//! All randomness is driven by explicit `u64` seeds; see [`seed`] for the
//! fan-out scheme that keeps parallel runs bit-reproducible.

// Negated comparisons reject NaN along with out-of-range values; the long
// float literals are tabulated quadrature constants.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod characterization;
pub mod charfun;
pub mod distribution;
pub mod error;
pub mod estimate;
pub mod poly;
pub mod quad;
pub mod quadform;
pub mod report;
pub mod seed;
pub mod vinogradov;

pub use distribution::Distribution;
pub use error::{Error, Result};
pub use estimate::{ComplexEstimate, RealEstimate};
pub use poly::{MultiIndexPolynomial, Polynomial, Polynomial1D, VinogradovPolynomial};
pub use report::{EnvelopePoint, EnvelopeReport, EnvelopeSummary};

pub use num_complex::Complex64;

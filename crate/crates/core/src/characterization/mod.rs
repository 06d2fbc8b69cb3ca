//! Characterization properties of quadratic forms in i.i.d. symmetric inputs.
//!
//! Membership of a law in the moment-determined class is never decided here;
//! [`carleman_diagnostic`] only reports evidence from finitely many moments.

pub mod experiments;
pub mod form;
pub mod moments;

pub use experiments::{counterexample_sampler, cp_distance, ks_two_sample, stability_experiment, KsTest, StabilityMetric};
pub use form::{classify, CaseLabel, Classification, SymmetricQuadraticForm, DEFAULT_DEPTH};
pub use moments::{carleman_diagnostic, moments_of, quad_moments, CarlemanDiagnostic, CarlemanTrend, MomentSequence};

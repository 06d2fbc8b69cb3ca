//! Characteristic functionals of polynomial images and their decay.

pub mod cantor;
pub mod empirical;
pub mod gaussian;
pub mod profile;

pub use cantor::{cantor_cf, cantor_cramer_scan, cantor_scan, cramer_bound, truncation_index};
pub use empirical::{
    cantor_power_threshold, cf_empirical, cf_empirical_grid, decay_envelope, decay_report, DecayModel,
};
pub use gaussian::{gaussian_monomial_cf, theorem4_envelope, GaussianCfMethod};
pub use profile::{condition5_check, phi_profile, AveragedCfProfile};

//! Laws of `|Y - a|^2` for a Gaussian element `Y` of a Hilbert space.

pub mod fk;
pub mod inversion;
pub mod mc;
pub mod spec;
pub mod verify;

pub use fk::{c1, fk_upper_bounds, ln_noncentral_fk, noncentral_fk, tilt_weight, TailFunctionals};
pub use inversion::{density_p, tail_prob, Cgf, DensityMethod, InversionParams, QfEstimate, TailMethod};
pub use spec::{HilbertGaussianSpec, Spectrum};
pub use verify::{verify_theorem15, verify_theorem16, SandwichOptions};

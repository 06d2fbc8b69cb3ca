//! Mean-value experiments: exact counts `J_k(P)`, Weyl sums, the stochastic
//! mean value `I_k(P)` and concentration functions.

pub mod count;
pub mod ik;
pub mod verify;
pub mod weyl;

pub use count::{count_cost, jk_count, CountCost, CountMethod, DiophantineCount};
pub use ik::{ik_estimate, AlphaSampling, CoefficientBox, IkOptions, MeanValueEstimate};
pub use verify::{
    concentration_sup, remark3_check, theorem9_ln_bound, verify_theorem10, verify_theorem7, verify_theorem8,
    verify_theorem9, ConcentrationMethod,
};
pub use weyl::{exact_node_counts, unit_cell_moment, vinogradov_constants, weyl_sum};

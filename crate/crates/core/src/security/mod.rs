//! Eavesdropper leakage control: the spectral cap that enforces the outage
//! constraint, its Monte Carlo check, and the robust S-procedure blocks.

mod chance;
mod robust;

pub use chance::{
    inverse_chi_square_quantile, spectral_cap, validate_chance_constraint, ChanceConstraintParams,
    ValidationReport,
};
pub use robust::{best_slack, robust_lmi_blocks, worst_case_snr, UncertaintyModel};

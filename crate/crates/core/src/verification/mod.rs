//! Manufactured-solution verification: exact fields, analytic forcing,
//! weighted error norms, and the h / dt / p convergence studies.

mod manufactured;
mod patch;
mod study;

pub use manufactured::{build_manufactured, ManufacturedError, ManufacturedSolution};
pub use patch::PatchSolution;
pub use study::{
    dt_rule_coefficient, dt_study, error_norms, h_study, observed_rate, p_study, StudyResult,
    StudyRow,
};

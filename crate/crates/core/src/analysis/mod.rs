//! Value-function tables, closed-form scalar oracle, sublevel-set checks
//! and continuity diagnostics.

pub mod continuity;
pub mod crosscheck;
pub mod levelset;
pub mod oracle;
pub mod table;

pub use continuity::{
    continuity_report, modulus_curve, refinement_ratios, ContinuityReport, Exclusion,
};
pub use crosscheck::{cross_check, CrossCheckReport, CrossCheckRow};
pub use levelset::{level_set_suite, CheckOutcome, LevelSetReport};
pub use oracle::{oracle1d_control, oracle1d_reach, oracle1d_value, Oracle1dParams};
pub use table::{sample_feasible_states, sweep, sweep_with_jobs, AxisSpec, GridSpec, ValueTable};

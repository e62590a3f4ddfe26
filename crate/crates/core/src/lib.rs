//! Sparse ("maximum hands-off") control of single-input LTI systems.
//!
//! Under controllability and nonsingular `A`, the minimum-support control
//! that steers `ξ` to the origin at time `T` with `|u| ≤ 1` coincides with
//! the minimum-fuel (L1) control, and the two value functions agree. This
//! crate computes that control two independent ways, by an exact-
//! discretization LP ([`lp`]) and by costate shooting ([`shooting`]), and
//! checks the structural facts about sublevel sets and continuity of the
//! value function numerically ([`analysis`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod numfmt;
pub mod plot;
pub mod shooting;
pub mod simplex;

pub use error::{Error, Result};
pub use linalg::{cell_integral, expm, kalman_rank, Matrix};
pub use lp::{solve_lp, transcribe, value_l1, LpTranscription, SolveResult, SolveStatus};
pub use model::{check_assumption1, terminal_map, Assumption1, ControlSignal, LtiSystem};
pub use shooting::{dead_zone, shoot_solve, CostateSeed, ShootOptions, SwitchingStructure};

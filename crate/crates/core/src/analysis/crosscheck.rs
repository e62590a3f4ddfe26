//! LP versus shooting on a set of initial states.

use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::lp::{solve_lp_with, LpOptions, LpTranscription};
use crate::model::{CellGrid, LtiSystem};
use crate::shooting::{default_seeds, shoot_solve, CostateSeed, ShootOptions};

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckRow {
    pub xi: Vec<f64>,
    pub value_lp: Option<f64>,
    pub value_shoot: Option<f64>,
    pub shoot_converged: bool,
    pub agree: bool,
    /// `l0 − l1` of the LP vertex.
    pub lp_gap: f64,
    /// Exact `l0 == l1` for the converged shooting control.
    pub shoot_exact: bool,
    pub fractional_cells: usize,
    pub singular_fraction: f64,
    pub tangential: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckReport {
    pub rows: Vec<CrossCheckRow>,
    /// `max(2n·dt, 1e-6)`.
    pub tolerance: f64,
    /// `(n+1)·dt`.
    pub gap_bound: f64,
    pub dt: f64,
}

impl CrossCheckReport {
    pub fn agreement_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 1.0;
        }
        self.rows.iter().filter(|r| r.agree).count() as f64 / self.rows.len() as f64
    }

    pub fn gap_bound_holds(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.value_lp.is_some())
            .all(|r| r.lp_gap <= self.gap_bound)
    }

    pub fn shoot_exact_holds(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.shoot_converged)
            .all(|r| r.shoot_exact)
    }

    /// Converged shots whose value disagrees with the LP.
    pub fn converged_disagreements(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.shoot_converged && !r.agree)
            .count()
    }
}

/// Solves each state by LP, then shoots from the LP costate estimate
/// followed by `opts.starts` random seeds.
pub fn cross_check(
    sys: &LtiSystem,
    xis: &[Vec<f64>],
    cells: usize,
    opts: &ShootOptions,
) -> Result<CrossCheckReport> {
    let grid = Arc::new(CellGrid::new(sys, cells)?);
    let n = sys.dim();
    let dt = grid.dt();
    let tolerance = (2.0 * n as f64 * dt).max(1e-6);
    let lp_opts = LpOptions::default();
    let random = default_seeds(sys, opts.starts, opts.seed);
    let mut rows = Vec::with_capacity(xis.len());
    for xi in xis {
        let lp = solve_lp_with(&LpTranscription::new(grid.clone(), xi.clone())?, &lp_opts)?;
        let value_lp = lp.feasible().then_some(lp.value);
        let mut seeds = Vec::with_capacity(random.len() + 1);
        if let Some(p) = &lp.costate_estimate {
            seeds.push(CostateSeed(p.clone()));
        }
        seeds.extend(random.iter().cloned());
        let shot = shoot_solve(sys, xi, &seeds, opts)?;
        let value_shoot = shot.converged.then_some(shot.result.value);
        let agree = match (value_lp, value_shoot) {
            (Some(a), Some(b)) => (a - b).abs() <= tolerance,
            _ => false,
        };
        rows.push(CrossCheckRow {
            xi: xi.clone(),
            value_lp,
            value_shoot,
            shoot_converged: shot.converged,
            agree,
            lp_gap: if lp.feasible() {
                lp.control.l0_norm(lp_opts.zero_tol) - lp.control.l1_norm()
            } else {
                0.0
            },
            shoot_exact: shot.result.value_l0 == shot.result.value,
            fractional_cells: lp.fractional_cells,
            singular_fraction: shot.singular_fraction,
            tangential: shot.tangential,
        });
    }
    Ok(CrossCheckReport {
        rows,
        tolerance,
        gap_bound: (n as f64 + 1.0) * dt,
        dt,
    })
}

//! Sublevel-set checks relating the budget-constrained reachable sets
//! `R_α = {∫e^{-As}Bu ds : ‖u‖∞ ≤ 1, ‖u‖₁ ≤ α}` to the L1 value function.
//!
//! Membership in `R_α` is decided by phase-1 feasibility of the LP with the
//! extra row `dt·Σ(p+m) ≤ α`; values come from the plain LP. All identity
//! checks carry a slack of `2n·dt` for the discretization.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{budget_feasible, solve_lp, LpTranscription};
use crate::model::{CellGrid, LtiSystem};
use crate::numfmt::sig12;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst signed margin seen; negative means a violation.
    pub slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetReport {
    pub checks: Vec<CheckOutcome>,
    pub tolerance: f64,
}

impl LevelSetReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Sample {
    xi: Vec<f64>,
    value: Option<f64>,
    /// Budget feasibility at each sorted alpha.
    member: Vec<bool>,
    at_zero: bool,
    at_horizon: bool,
}

/// Relative distances from the boundary probed by the boundary check.
const BOUNDARY_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 0.0];

pub fn level_set_suite(
    sys: &LtiSystem,
    alphas: &[f64],
    sample_xis: &[Vec<f64>],
    cells: usize,
) -> Result<LevelSetReport> {
    let horizon = sys.horizon();
    if let Some(a) = alphas.iter().find(|a| !(0.0..=horizon).contains(*a)) {
        return Err(Error::InvalidArgument(format!(
            "alpha {a} outside [0, {horizon}]"
        )));
    }
    let grid = Arc::new(CellGrid::new(sys, cells)?);
    let n = sys.dim();
    let dt = grid.dt();
    let tol = 2.0 * n as f64 * dt;
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let mut xis = sample_xis.to_vec();
    let origin = vec![0.0; n];
    if !xis.contains(&origin) {
        xis.push(origin);
    }

    let samples = xis
        .par_iter()
        .map(|xi| -> Result<Sample> {
            let t = LpTranscription::new(grid.clone(), xi.clone())?;
            let r = solve_lp(&t)?;
            let member = alphas
                .iter()
                .map(|&a| budget_feasible(&t, a))
                .collect::<Result<Vec<_>>>()?;
            Ok(Sample {
                xi: xi.clone(),
                value: r.feasible().then_some(r.value),
                member,
                at_zero: budget_feasible(&t, 0.0)?,
                at_horizon: budget_feasible(&t, horizon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::with_capacity(5);

    // (i) nesting
    let mut violations = 0;
    for s in &samples {
        if let Some(first) = s.member.iter().position(|&m| m) {
            violations += s.member[first..].iter().filter(|&&m| !m).count();
        }
    }
    checks.push(CheckOutcome {
        name: "nesting",
        passed: violations == 0,
        slack: -(violations as f64),
        detail: format!(
            "{violations} violation(s) over {} states x {} budgets",
            samples.len(),
            alphas.len()
        ),
    });

    // (ii) sublevel identity
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    for s in &samples {
        for (&a, &m) in alphas.iter().zip(&s.member) {
            let margin = match (m, s.value) {
                (true, Some(v)) => a + tol - v,
                (true, None) => -f64::INFINITY,
                (false, Some(v)) => v - (a - tol),
                (false, None) => f64::INFINITY,
            };
            if margin < 0.0 {
                bad += 1;
            }
            worst = worst.min(margin);
        }
    }
    checks.push(CheckOutcome {
        name: "sublevel identity",
        passed: bad == 0,
        slack: worst,
        detail: format!("{bad} disagreement(s) between budget feasibility and V <= alpha"),
    });

    // (iii) the budget T never binds
    let bad = samples
        .iter()
        .filter(|s| s.at_horizon != s.value.is_some())
        .count();
    checks.push(CheckOutcome {
        name: "R_T = R(T)",
        passed: bad == 0,
        slack: -(bad as f64),
        detail: format!("{bad} state(s) where budget T changes feasibility"),
    });

    // (iv) zero budget reaches only the origin
    let feas_slack = 1e-9 * (n as f64).sqrt();
    let mut bad = 0;
    let mut worst = f64::INFINITY;
    for s in &samples {
        let norm = s.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s.at_zero {
            worst = worst.min(feas_slack - norm);
            if norm > feas_slack {
                bad += 1;
            }
        } else if norm == 0.0 {
            bad += 1;
            worst = worst.min(-1.0);
        }
    }
    checks.push(CheckOutcome {
        name: "R_0 = {0}",
        passed: bad == 0,
        slack: worst,
        detail: format!("{bad} state(s) misclassified by the zero budget"),
    });

    checks.push(boundary_check(&grid, tol)?);

    Ok(LevelSetReport {
        checks,
        tolerance: tol,
    })
}

/// Boundary points of the grid reachable set along `±e_i`: `ξ_b = -Σ G_k u_k`
/// with `u_k = sgn(c·G_k)` maximizing `c·Σ G_k u_k`. Values at `(1-ε)ξ_b`
/// must rise towards `T` as `ε → 0` and reach it at `ε = 0`.
fn boundary_check(grid: &Arc<CellGrid>, tol: f64) -> Result<CheckOutcome> {
    let n = grid.dim();
    let horizon = grid.horizon();
    let mut directions = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[i] = s;
            directions.push(c);
        }
    }
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    let mut finals = Vec::new();
    for c in &directions {
        let u: Vec<f64> = grid
            .columns()
            .iter()
            .map(|g| {
                let d: f64 = g.iter().zip(c).map(|(a, b)| a * b).sum();
                if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect();
        let boundary: Vec<f64> = grid.apply(&u).iter().map(|v| -v).collect();
        let values = BOUNDARY_EPS
            .iter()
            .map(|eps| {
                let xi: Vec<f64> = boundary.iter().map(|v| (1.0 - eps) * v).collect();
                let r = solve_lp(&LpTranscription::new(grid.clone(), xi)?)?;
                Ok(r.feasible().then_some(r.value))
            })
            .collect::<Result<Vec<_>>>()?;
        let Some(values) = values.into_iter().collect::<Option<Vec<f64>>>() else {
            bad += 1;
            worst = worst.min(-f64::INFINITY);
            continue;
        };
        for w in values.windows(2) {
            let m = w[1] - w[0] + tol;
            worst = worst.min(m);
            if m < 0.0 {
                bad += 1;
            }
        }
        let last = *values.last().unwrap();
        let m = tol - (last - horizon).abs();
        worst = worst.min(m);
        if m < 0.0 {
            bad += 1;
        }
        finals.push(last);
    }
    Ok(CheckOutcome {
        name: "boundary -> T",
        passed: bad == 0,
        slack: worst,
        detail: format!(
            "{} direction(s); boundary values {:?}, horizon {horizon}",
            directions.len(),
            finals.iter().map(|v| sig12(*v)).collect::<Vec<_>>()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_suite_passes() {
        let sys = LtiSystem::scalar(1.0, 2.0, 5.0).unwrap();
        let x1 = 2.0 * (1.0 - (-5f64).exp());
        let xis: Vec<Vec<f64>> = (-6..=6).map(|i| vec![x1 * 1.1 * i as f64 / 6.0]).collect();
        let rep = level_set_suite(&sys, &[0.0, 1.0, 2.5, 5.0], &xis, 400).unwrap();
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(rep.checks.len(), 5);
    }

    #[test]
    fn zero_budget_membership() {
        let sys = LtiSystem::scalar(1.0, 2.0, 5.0).unwrap();
        let grid = Arc::new(CellGrid::new(&sys, 100).unwrap());
        let t0 = LpTranscription::new(grid.clone(), vec![0.0]).unwrap();
        assert!(budget_feasible(&t0, 0.0).unwrap());
        let t = LpTranscription::new(grid, vec![0.5]).unwrap();
        assert!(!budget_feasible(&t, 0.0).unwrap());
    }

    #[test]
    fn rejects_alpha_beyond_horizon() {
        let sys = LtiSystem::scalar(1.0, 2.0, 5.0).unwrap();
        assert!(level_set_suite(&sys, &[6.0], &[vec![0.0]], 10).is_err());
    }
}

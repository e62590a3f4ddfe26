//! Minimum-fuel control as a linear program over an exact discretization.
//!
//! With `u_k = p_k − m_k`, `p_k, m_k ∈ [0, 1]`:
//!
//! ```text
//! minimize  dt · Σ (p_k + m_k)   subject to   Σ G_k (p_k − m_k) = −ξ
//! ```
//!
//! `G_k` are exact cell integrals of `e^{-As}B`, so the only approximation
//! is restricting `u` to be constant on each cell. A vertex solution has at
//! most `n` variables strictly inside their bounds, hence at most `n` cells
//! where `|u_k| ∉ {0, 1}`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CellGrid, ControlSignal, LtiSystem, DEFAULT_ZERO_TOL};
use crate::shooting::SwitchingStructure;
use crate::simplex::{BoundedLp, LpStatus, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Solved,
    Infeasible,
    /// Shooting found no start meeting the residual tolerance.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lp,
    Shoot,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub method: Method,
    pub status: SolveStatus,
    pub control: ControlSignal,
    /// L1 cost; `+∞` when infeasible.
    pub value: f64,
    /// Support measure of the returned control.
    pub value_l0: f64,
    pub fractional_cells: usize,
    /// `‖Σ G_k u_k + ξ‖₂`.
    pub residual: f64,
    pub iterations: usize,
    /// `-y` from the simplex multipliers: an estimate of the initial costate.
    pub costate_estimate: Option<Vec<f64>>,
    /// Present for shooting solutions, where costs come from the exact
    /// switching times rather than the sampled grid.
    pub switching: Option<SwitchingStructure>,
}

impl SolveResult {
    pub fn feasible(&self) -> bool {
        self.status == SolveStatus::Solved
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub zero_tol: f64,
    pub simplex: SimplexOptions,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            zero_tol: DEFAULT_ZERO_TOL,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpTranscription {
    grid: Arc<CellGrid>,
    xi: Vec<f64>,
}

impl LpTranscription {
    pub fn new(grid: Arc<CellGrid>, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != grid.dim() {
            return Err(Error::Dimension(format!(
                "initial state has length {}, system dimension is {}",
                xi.len(),
                grid.dim()
            )));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        Ok(LpTranscription { grid, xi })
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    /// Objective coefficient of every split variable.
    pub fn objective(&self) -> Vec<f64> {
        vec![self.dt(); 2 * self.grid.cells()]
    }

    /// Builds the LP; with `budget = Some(α)` adds `dt·Σ(p+m) ≤ α`.
    fn build(&self, budget: Option<f64>) -> BoundedLp {
        let dt = self.dt();
        let mut rhs: Vec<f64> = self.xi.iter().map(|v| -v).collect();
        if let Some(alpha) = budget {
            rhs.push(alpha);
        }
        let mut lp = BoundedLp::new(rhs);
        let extra = budget.map(|_| dt);
        for g in self.grid.columns() {
            let mut plus = g.clone();
            let mut minus: Vec<f64> = g.iter().map(|v| -v).collect();
            if let Some(d) = extra {
                plus.push(d);
                minus.push(d);
            }
            lp.add_column(plus, dt, 1.0);
            lp.add_column(minus, dt, 1.0);
        }
        if budget.is_some() {
            let mut slack = vec![0.0; self.grid.dim()];
            slack.push(1.0);
            lp.add_column(slack, 0.0, f64::INFINITY);
        }
        lp
    }

    fn residual(&self, control: &ControlSignal) -> f64 {
        self.grid
            .apply(control.values())
            .iter()
            .zip(&self.xi)
            .map(|(r, x)| (r + x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn control_from_split(&self, x: &[f64]) -> Result<ControlSignal> {
        let values = x
            .chunks_exact(2)
            .map(|pm| (pm[0] - pm[1]).clamp(-1.0, 1.0))
            .collect();
        ControlSignal::new(self.grid.horizon(), values)
    }
}

pub fn transcribe(sys: &LtiSystem, xi: &[f64], cells: usize) -> Result<LpTranscription> {
    let grid = Arc::new(CellGrid::new(sys, cells)?);
    LpTranscription::new(grid, xi.to_vec())
}

pub fn solve_lp(t: &LpTranscription) -> Result<SolveResult> {
    solve_lp_with(t, &LpOptions::default())
}

pub fn solve_lp_with(t: &LpTranscription, opts: &LpOptions) -> Result<SolveResult> {
    let sol = t.build(None).solve(&opts.simplex)?;
    let horizon = t.grid.horizon();
    if sol.status == LpStatus::Infeasible {
        let control = ControlSignal::zeros(horizon, t.grid.cells())?;
        return Ok(SolveResult {
            method: Method::Lp,
            status: SolveStatus::Infeasible,
            residual: t.residual(&control),
            control,
            value: f64::INFINITY,
            value_l0: f64::INFINITY,
            fractional_cells: 0,
            iterations: sol.iterations,
            costate_estimate: None,
            switching: None,
        });
    }
    let control = t.control_from_split(&sol.x)?;
    Ok(SolveResult {
        method: Method::Lp,
        status: SolveStatus::Solved,
        value: control.l1_norm(),
        value_l0: control.l0_norm(opts.zero_tol),
        fractional_cells: control.fractional_cells(opts.zero_tol),
        residual: t.residual(&control),
        iterations: sol.iterations,
        costate_estimate: Some(sol.duals.iter().map(|y| -y).collect()),
        control,
        switching: None,
    })
}

/// Optimal L1 cost, or `None` when `ξ` is not steerable on this grid.
pub fn value_l1(sys: &LtiSystem, xi: &[f64], cells: usize) -> Result<Option<f64>> {
    let r = solve_lp(&transcribe(sys, xi, cells)?)?;
    Ok(r.feasible().then_some(r.value))
}

/// Values at `N` and `2N` cells, for judging discretization convergence.
pub fn value_l1_refinement(
    sys: &LtiSystem,
    xi: &[f64],
    cells: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    Ok((value_l1(sys, xi, cells)?, value_l1(sys, xi, 2 * cells)?))
}

/// Whether some admissible grid control steers `ξ` with `‖u‖₁ ≤ α`.
pub fn budget_feasible(t: &LpTranscription, alpha: f64) -> Result<bool> {
    budget_feasible_with(t, alpha, &SimplexOptions::default())
}

pub fn budget_feasible_with(
    t: &LpTranscription,
    alpha: f64,
    opts: &SimplexOptions,
) -> Result<bool> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "budget must be non-negative, got {alpha}"
        )));
    }
    let sol = t.build(Some(alpha)).find_feasible(opts)?;
    Ok(sol.status == LpStatus::Optimal)
}

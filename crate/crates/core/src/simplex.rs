//! Dense revised simplex for box-bounded equality-form LPs:
//!
//! ```text
//! minimize  cᵀx   subject to  A x = b,  0 ≤ x ≤ u   (u may be +∞)
//! ```
//!
//! Two phases with one artificial per row. Nonbasic variables sit at either
//! bound, so an entering variable may simply flip to its opposite bound
//! without a basis change. The basis is at most a handful of rows here, so
//! its inverse is rebuilt from scratch after every pivot.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Phase-1 acceptance threshold on the largest artificial value.
    pub feastol: f64,
    /// Reduced-cost threshold for optimality.
    pub opttol: f64,
    /// `None` picks a limit proportional to the problem size.
    pub max_iter: Option<usize>,
    /// Consecutive degenerate steps before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feastol: 1e-9,
            opttol: 1e-9,
            max_iter: None,
            bland_after: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variables only.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `y = c_Bᵀ B⁻¹` at termination.
    pub duals: Vec<f64>,
    /// Indices of basic structural variables.
    pub basic: Vec<usize>,
    pub iterations: usize,
    /// Sum of artificial values after phase 1.
    pub infeasibility: f64,
}

#[derive(Debug, Clone)]
pub struct BoundedLp {
    rows: usize,
    columns: Vec<Vec<f64>>,
    cost: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl BoundedLp {
    pub fn new(rhs: Vec<f64>) -> Self {
        BoundedLp {
            rows: rhs.len(),
            columns: Vec::new(),
            cost: Vec::new(),
            upper: Vec::new(),
            rhs,
        }
    }

    /// Appends a variable `0 ≤ x_j ≤ upper` and returns its index.
    pub fn add_column(&mut self, column: Vec<f64>, cost: f64, upper: f64) -> usize {
        assert_eq!(
            column.len(),
            self.rows,
            "column length must equal row count"
        );
        assert!(upper >= 0.0, "upper bound must be non-negative");
        self.columns.push(column);
        self.cost.push(cost);
        self.upper.push(upper);
        self.columns.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Runs phase 1 and, if feasible, phase 2.
    pub fn solve(&self, opts: &SimplexOptions) -> Result<LpSolution> {
        Solver::new(self, opts).run(false)
    }

    /// Phase 1 only: decides feasibility, returns a feasible point if any.
    pub fn find_feasible(&self, opts: &SimplexOptions) -> Result<LpSolution> {
        Solver::new(self, opts).run(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

/// Improving variable ordered by reduced-cost magnitude, then lowest index.
struct Candidate {
    var: usize,
    dir: f64,
    score: f64,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(other.var.cmp(&self.var))
    }
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STEP: f64 = 1e-12;

struct Solver<'a> {
    lp: &'a BoundedLp,
    opts: &'a SimplexOptions,
    m: usize,
    nstruct: usize,
    upper: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    x_basic: Vec<f64>,
    art_sign: Vec<f64>,
    allow_artificial_entry: bool,
    iterations: usize,
    max_iter: usize,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a BoundedLp, opts: &'a SimplexOptions) -> Self {
        let m = lp.rows;
        let nstruct = lp.columns.len();
        let art_sign: Vec<f64> = lp
            .rhs
            .iter()
            .map(|&b| if b < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut state = vec![VarState::Lower; nstruct];
        state.extend(std::iter::repeat_n(VarState::Basic, m));
        let basis: Vec<usize> = (nstruct..nstruct + m).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = art_sign[i];
        }
        let x_basic = lp.rhs.iter().map(|b| b.abs()).collect();
        let max_iter = opts.max_iter.unwrap_or(50 * (nstruct + m) + 1000);
        Solver {
            lp,
            opts,
            m,
            nstruct,
            upper,
            cost: vec![0.0; nstruct + m],
            state,
            basis,
            binv,
            x_basic,
            art_sign,
            allow_artificial_entry: true,
            iterations: 0,
            max_iter,
        }
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.nstruct {
            self.lp.columns[j].iter().zip(y).map(|(a, b)| a * b).sum()
        } else {
            let r = j - self.nstruct;
            self.art_sign[r] * y[r]
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.nstruct {
            self.lp.columns[j].clone()
        } else {
            let r = j - self.nstruct;
            let mut e = vec![0.0; self.m];
            e[r] = self.art_sign[r];
            e
        }
    }

    /// `B⁻¹ v`.
    fn ftran(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * v[k]).sum())
            .collect()
    }

    /// `c_Bᵀ B⁻¹`.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|r| self.cost[self.basis[r]] * self.binv[r * m + i])
                    .sum()
            })
            .collect()
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut b = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            let col = self.column(j);
            for i in 0..m {
                b[i * m + r] = col[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let p = (k..m)
                .max_by(|&x, &y| b[x * m + k].abs().total_cmp(&b[y * m + k].abs()))
                .unwrap();
            let piv = b[p * m + k];
            if piv.abs() < 1e-14 {
                return Err(Error::Dimension("simplex basis became singular".into()));
            }
            if p != k {
                for j in 0..m {
                    b.swap(k * m + j, p * m + j);
                    inv.swap(k * m + j, p * m + j);
                }
            }
            for j in 0..m {
                b[k * m + j] /= piv;
                inv[k * m + j] /= piv;
            }
            for i in 0..m {
                if i != k {
                    let f = b[i * m + k];
                    if f != 0.0 {
                        for j in 0..m {
                            b[i * m + j] -= f * b[k * m + j];
                            inv[i * m + j] -= f * inv[k * m + j];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let mut r = self.lp.rhs.clone();
        for j in 0..self.nstruct {
            if self.state[j] == VarState::Upper {
                let u = self.upper[j];
                for (ri, a) in r.iter_mut().zip(&self.lp.columns[j]) {
                    *ri -= a * u;
                }
            }
        }
        self.x_basic = self.ftran(&r);
    }

    fn objective(&self) -> f64 {
        let mut obj: f64 = self
            .basis
            .iter()
            .zip(&self.x_basic)
            .map(|(&j, &x)| self.cost[j] * x)
            .sum();
        for j in 0..self.nstruct {
            if self.state[j] == VarState::Upper {
                obj += self.cost[j] * self.upper[j];
            }
        }
        obj
    }

    fn artificial_sum(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x_basic)
            .filter(|(&j, _)| j >= self.nstruct)
            .map(|(_, &x)| x.max(0.0))
            .sum()
    }

    fn max_artificial(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x_basic)
            .filter(|(&j, _)| j >= self.nstruct)
            .map(|(_, &x)| x.abs())
            .fold(0.0, f64::max)
    }

    fn structural_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.nstruct)
            .map(|j| match self.state[j] {
                VarState::Upper => self.upper[j],
                _ => 0.0,
            })
            .collect();
        for (&j, &v) in self.basis.iter().zip(&self.x_basic) {
            if j < self.nstruct {
                x[j] = v.clamp(0.0, self.upper[j]);
            }
        }
        x
    }

    fn entering_candidate(&self, j: usize, y: &[f64]) -> Option<(f64, f64)> {
        let st = self.state[j];
        if st == VarState::Basic || self.upper[j] == 0.0 {
            return None;
        }
        let d = self.cost[j] - self.column_dot(j, y);
        match st {
            VarState::Lower if d < -self.opts.opttol => Some((1.0, -d)),
            VarState::Upper if d > self.opts.opttol => Some((-1.0, d)),
            _ => None,
        }
    }

    fn pricing_range(&self) -> usize {
        if self.allow_artificial_entry {
            self.nstruct + self.m
        } else {
            self.nstruct
        }
    }

    /// Lowest-index improving variable.
    fn bland_entering(&self) -> Option<(usize, f64)> {
        let y = self.duals();
        (0..self.pricing_range())
            .find_map(|j| self.entering_candidate(j, &y).map(|(dir, _)| (j, dir)))
    }

    /// Largest reduced cost, ties to the lowest index. Reprices when the
    /// queue runs dry.
    fn next_dantzig(&self, queue: &mut BinaryHeap<Candidate>) -> Option<(usize, f64)> {
        while let Some(c) = queue.pop() {
            let still = match self.state[c.var] {
                VarState::Lower => c.dir > 0.0,
                VarState::Upper => c.dir < 0.0,
                VarState::Basic => false,
            };
            if still {
                return Some((c.var, c.dir));
            }
        }
        let y = self.duals();
        let fresh: Vec<Candidate> = (0..self.pricing_range())
            .filter_map(|j| {
                self.entering_candidate(j, &y)
                    .map(|(dir, score)| Candidate { var: j, dir, score })
            })
            .collect();
        *queue = BinaryHeap::from(fresh);
        queue.pop().map(|c| (c.var, c.dir))
    }

    fn iterate(&mut self, phase_feasible: bool) -> Result<()> {
        let mut degenerate_run = 0usize;
        let mut since_refresh = 0usize;
        // Dantzig candidates. Reduced costs only change when the basis
        // does, so a bound flip consumes one candidate and the next best is
        // still the Dantzig choice.
        let mut queue: BinaryHeap<Candidate> = BinaryHeap::new();
        loop {
            if self.iterations >= self.max_iter {
                let best_value = phase_feasible.then(|| self.objective());
                return Err(Error::SolverFailure {
                    iterations: self.iterations,
                    best_value,
                });
            }
            let bland = degenerate_run > self.opts.bland_after;
            let Some((q, dir)) = (if bland {
                queue.clear();
                self.bland_entering()
            } else {
                self.next_dantzig(&mut queue)
            }) else {
                return Ok(());
            };
            self.iterations += 1;

            let w = self.ftran(&self.column(q));
            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None; // (basis row, goes to upper)
            let mut leave_pivot = 0.0f64;
            for (r, (&wi, &xb)) in w.iter().zip(&self.x_basic).enumerate() {
                let delta = dir * wi;
                let jb = self.basis[r];
                let (t, to_upper) = if delta > PIVOT_TOL {
                    ((xb / delta).max(0.0), false)
                } else if delta < -PIVOT_TOL && self.upper[jb].is_finite() {
                    (((self.upper[jb] - xb) / -delta).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if t < theta - DEGENERATE_STEP => true,
                    _ if t > theta + DEGENERATE_STEP => false,
                    None => t < theta,
                    Some((r0, _)) => {
                        if bland {
                            jb < self.basis[r0]
                        } else {
                            delta.abs() > leave_pivot
                        }
                    }
                };
                if better {
                    theta = t.min(theta);
                    leave = Some((r, to_upper));
                    leave_pivot = delta.abs();
                }
            }
            if !theta.is_finite() {
                return Err(Error::Dimension("LP is unbounded".into()));
            }

            for (xb, wi) in self.x_basic.iter_mut().zip(&w) {
                *xb -= theta * dir * wi;
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 {
                        VarState::Upper
                    } else {
                        VarState::Lower
                    };
                    since_refresh += 1;
                    if since_refresh >= 64 {
                        self.recompute_basic_values();
                        since_refresh = 0;
                    }
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.state[out] = if to_upper {
                        VarState::Upper
                    } else {
                        VarState::Lower
                    };
                    self.state[q] = VarState::Basic;
                    self.basis[r] = q;
                    self.refactor()?;
                    since_refresh = 0;
                    queue.clear();
                }
            }
            if theta <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    fn run(mut self, phase1_only: bool) -> Result<LpSolution> {
        for r in 0..self.m {
            self.cost[self.nstruct + r] = 1.0;
        }
        self.iterate(false)?;
        let infeasibility = self.artificial_sum();
        let feasible = self.max_artificial() <= self.opts.feastol;

        if feasible && !phase1_only {
            for r in 0..self.m {
                let j = self.nstruct + r;
                self.cost[j] = 0.0;
                self.upper[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.state[j] = VarState::Lower;
                }
            }
            self.cost[..self.nstruct].copy_from_slice(&self.lp.cost);
            self.allow_artificial_entry = false;
            self.iterate(true)?;
        } else if feasible {
            self.cost[..self.nstruct].copy_from_slice(&self.lp.cost);
            for r in 0..self.m {
                self.cost[self.nstruct + r] = 0.0;
            }
        }

        let x = self.structural_values();
        let objective = x.iter().zip(&self.lp.cost).map(|(a, c)| a * c).sum();
        let basic = self
            .basis
            .iter()
            .copied()
            .filter(|&j| j < self.nstruct)
            .collect();
        Ok(LpSolution {
            status: if feasible {
                LpStatus::Optimal
            } else {
                LpStatus::Infeasible
            },
            x,
            objective,
            duals: self.duals(),
            basic,
            iterations: self.iterations,
            infeasibility,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions::default()
    }

    #[test]
    fn tiny_lp() {
        // min -x0 - 2 x1  s.t. x0 + x1 + s = 1.5, x ≤ 1
        let mut lp = BoundedLp::new(vec![1.5]);
        lp.add_column(vec![1.0], -1.0, 1.0);
        lp.add_column(vec![1.0], -2.0, 1.0);
        lp.add_column(vec![1.0], 0.0, f64::INFINITY);
        let sol = lp.solve(&opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
        assert!((sol.objective + 2.5).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // x0 + x1 = 3 with both ≤ 1
        let mut lp = BoundedLp::new(vec![3.0]);
        lp.add_column(vec![1.0], 1.0, 1.0);
        lp.add_column(vec![1.0], 1.0, 1.0);
        let sol = lp.solve(&opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!((sol.infeasibility - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_two_rows() {
        // x0 - x1 = -0.5, x0 + x1 + x2 = 1, min x2 + x1
        let mut lp = BoundedLp::new(vec![-0.5, 1.0]);
        lp.add_column(vec![1.0, 1.0], 0.0, 1.0);
        lp.add_column(vec![-1.0, 1.0], 1.0, 1.0);
        lp.add_column(vec![0.0, 1.0], 1.0, 1.0);
        let sol = lp.solve(&opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // x1 = x0 + 0.5, x2 = 1 - 2x0 - 0.5, cost = x0 + 0.5 + 0.5 - 2x0 = 1 - x0 → x0 = 0.25
        assert!((sol.x[0] - 0.25).abs() < 1e-12, "{:?}", sol.x);
        assert!((sol.objective - 0.75).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_reports_failure() {
        let mut lp = BoundedLp::new(vec![2.0]);
        for _ in 0..4 {
            lp.add_column(vec![1.0], 1.0, 1.0);
        }
        let o = SimplexOptions {
            max_iter: Some(1),
            ..opts()
        };
        assert!(matches!(lp.solve(&o), Err(Error::SolverFailure { .. })));
    }

    #[test]
    fn phase_one_only() {
        let mut lp = BoundedLp::new(vec![0.7]);
        lp.add_column(vec![1.0], 5.0, 1.0);
        let sol = lp.find_feasible(&opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 0.7).abs() < 1e-14);
    }
}

//! The single-input plant `ẋ = Ax + Bu` on a fixed horizon, piecewise-constant
//! controls on a uniform grid, and the controllability / nonsingularity gate
//! under which the L1 problem is normal.
//!
//! Steering convention: `x(T) = 0` from `x(0) = ξ` holds exactly when
//! `∫₀ᵀ e^{-As} B u(s) ds = -ξ`.

use std::fmt;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{cell_integral, kalman_rank, Matrix};

/// Default threshold below which a control value counts as zero for the
/// support measure.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Relative threshold on `|det A|` (scaled by `max|a_ij|^n`).
pub const SINGULAR_DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Assumption1 {
    pub controllable: bool,
    pub a_nonsingular: bool,
    pub normal: bool,
}

impl Assumption1 {
    /// Human-readable reason the gate fails, if it does.
    pub fn failure_reason(&self) -> Option<String> {
        let mut reasons = Vec::new();
        if !self.a_nonsingular {
            reasons.push("A is singular");
        }
        if !self.controllable {
            reasons.push("(A, B) is not controllable");
        }
        if reasons.is_empty() {
            None
        } else {
            Some(reasons.join("; "))
        }
    }
}

impl fmt::Display for Assumption1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "controllable={} a_nonsingular={} normal={}",
            self.controllable, self.a_nonsingular, self.normal
        )
    }
}

#[derive(Debug, Clone)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
    horizon: f64,
    gate: Assumption1,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix, horizon: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.cols() != 1 || b.rows() != a.rows() {
            return Err(Error::Dimension(format!(
                "B must be a column of length {}, got {}x{}",
                a.rows(),
                b.rows(),
                b.cols()
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon T must be positive and finite, got {horizon}"
            )));
        }
        let gate = check_assumption1_parts(&a, &b)?;
        Ok(LtiSystem {
            a,
            b,
            horizon,
            gate,
        })
    }

    /// `ẋ = a x + b u` on `[0, T]`.
    pub fn scalar(a: f64, b: f64, horizon: f64) -> Result<Self> {
        LtiSystem::new(
            Matrix::new(1, 1, vec![a])?,
            Matrix::new(1, 1, vec![b])?,
            horizon,
        )
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn assumption1(&self) -> Assumption1 {
        self.gate
    }

    /// Euclidean norm of the input column.
    pub fn b_norm(&self) -> f64 {
        self.b.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `e^{-At} B`.
    pub fn kernel_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(crate::linalg::expm(&self.a, -t)?.mul_vec(self.b.as_slice()))
    }

    /// Parses `{"A": [[...], ...], "B": [...], "T": number}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::Parse("system file must be a JSON object".into()))?;

        let field = |name: &'static str| {
            obj.get(name).ok_or(Error::SystemField {
                field: name,
                message: "missing".into(),
            })
        };
        let number = |v: &Value, name: &'static str| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or(Error::SystemField {
                    field: name,
                    message: format!("expected a finite number, got {v}"),
                })
        };

        let rows = field("A")?.as_array().ok_or(Error::SystemField {
            field: "A",
            message: "expected an array of rows".into(),
        })?;
        let mut a_rows = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_array().ok_or(Error::SystemField {
                field: "A",
                message: format!("expected a row array, got {row}"),
            })?;
            a_rows.push(
                row.iter()
                    .map(|v| number(v, "A"))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let n = a_rows.len();
        if n == 0 || a_rows.iter().any(|r| r.len() != n) {
            return Err(Error::SystemField {
                field: "A",
                message: "must be a non-empty square matrix".into(),
            });
        }

        let b_vals = field("B")?
            .as_array()
            .ok_or(Error::SystemField {
                field: "B",
                message: "expected a flat array".into(),
            })?
            .iter()
            .map(|v| number(v, "B"))
            .collect::<Result<Vec<_>>>()?;
        if b_vals.len() != n {
            return Err(Error::SystemField {
                field: "B",
                message: format!("expected length {n}, got {}", b_vals.len()),
            });
        }

        let horizon = number(field("T")?, "T")?;
        if horizon <= 0.0 {
            return Err(Error::SystemField {
                field: "T",
                message: format!("must be positive, got {horizon}"),
            });
        }

        LtiSystem::new(
            Matrix::from_rows(&a_rows)?,
            Matrix::column_vector(&b_vals)?,
            horizon,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        LtiSystem::from_json_str(&text)
    }

    pub fn to_json(&self) -> Value {
        let n = self.dim();
        let a: Vec<Vec<f64>> = (0..n).map(|i| self.a.row(i).to_vec()).collect();
        serde_json::json!({ "A": a, "B": self.b.as_slice(), "T": self.horizon })
    }
}

fn check_assumption1_parts(a: &Matrix, b: &Matrix) -> Result<Assumption1> {
    let n = a.rows();
    let controllable = kalman_rank(a, b)? == n;
    let scale = a.max_abs().powi(n as i32);
    let a_nonsingular = a.determinant()?.abs() > SINGULAR_DET_TOL * scale;
    Ok(Assumption1 {
        controllable,
        a_nonsingular,
        normal: controllable && a_nonsingular,
    })
}

/// Controllability and nonsingularity of `A`; `normal` is their conjunction,
/// which is sufficient for the L1 problem to have no singular intervals.
pub fn check_assumption1(sys: &LtiSystem) -> Assumption1 {
    sys.gate
}

/// Piecewise-constant control on `N` equal cells of `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    horizon: f64,
    values: Vec<f64>,
}

impl ControlSignal {
    pub fn new(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "control needs at least one cell".into(),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("bad horizon {horizon}")));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "control value {v} at cell {k} is outside [-1, 1]"
            )));
        }
        Ok(ControlSignal { horizon, values })
    }

    pub fn zeros(horizon: f64, cells: usize) -> Result<Self> {
        ControlSignal::new(horizon, vec![0.0; cells])
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫|u| dt`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.dt()
    }

    /// Measure of the cells where `|u| > zero_tol`.
    pub fn l0_norm(&self, zero_tol: f64) -> f64 {
        self.values.iter().filter(|v| v.abs() > zero_tol).count() as f64 * self.dt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of cells with `zero_tol < |u| < 1 - zero_tol`.
    pub fn fractional_cells(&self, zero_tol: f64) -> usize {
        self.values
            .iter()
            .filter(|v| v.abs() > zero_tol && v.abs() < 1.0 - zero_tol)
            .count()
    }
}

/// Columns `G_k = ∫_{t_k}^{t_{k+1}} e^{-As} B ds` of a uniform `N`-cell grid,
/// with `t_k = kT/N`.
#[derive(Debug, Clone)]
pub struct CellGrid {
    dim: usize,
    horizon: f64,
    columns: Vec<Vec<f64>>,
}

impl CellGrid {
    pub fn new(sys: &LtiSystem, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument(
                "cell count must be at least 1".into(),
            ));
        }
        let t = sys.horizon();
        let columns = (0..cells)
            .map(|k| {
                let t0 = t * k as f64 / cells as f64;
                let t1 = t * (k + 1) as f64 / cells as f64;
                cell_integral(sys.a(), sys.b(), t0, t1)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellGrid {
            dim: sys.dim(),
            horizon: t,
            columns,
        })
    }

    pub fn cells(&self) -> usize {
        self.columns.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.columns.len() as f64
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `Σ_k G_k u_k` for per-cell values (not required to be admissible).
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(
            values.len(),
            self.cells(),
            "control/grid cell count mismatch"
        );
        let mut out = vec![0.0; self.dim];
        for (g, &u) in self.columns.iter().zip(values) {
            if u != 0.0 {
                for (o, gi) in out.iter_mut().zip(g) {
                    *o += gi * u;
                }
            }
        }
        out
    }

    /// Per-axis half-widths of the smallest box containing the reachable set
    /// of this grid: `Σ_k |G_k[i]|`.
    pub fn reach_box(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.columns.iter().map(|g| g[i].abs()).sum())
            .collect()
    }
}

/// `∫₀ᵀ e^{-As} B u(s) ds` for a piecewise-constant control. The control
/// steers `ξ` to the origin iff this equals `-ξ`.
pub fn terminal_map(sys: &LtiSystem, u: &ControlSignal) -> Result<Vec<f64>> {
    if (u.horizon() - sys.horizon()).abs() > 1e-12 * sys.horizon() {
        return Err(Error::InvalidArgument(format!(
            "control horizon {} does not match system horizon {}",
            u.horizon(),
            sys.horizon()
        )));
    }
    Ok(CellGrid::new(sys, u.cells())?.apply(u.values()))
}

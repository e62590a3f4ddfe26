//! Discrete continuity diagnostics for value tables.
//!
//! The value function has unbounded slope at the edge of the reachable set,
//! so jumps are measured on a core region with a boundary band removed.
//! Under refinement the modulus is compared over a common region: the hull
//! of points every table includes, so that finer tables are not charged for
//! reaching further into the band.

use serde::Serialize;

use crate::error::{Error, Result};

use super::table::ValueTable;

/// Which lattice points take part in the jump computation.
#[derive(Debug, Clone, PartialEq)]
pub enum Exclusion {
    /// Every feasible point.
    None,
    /// Feasible points inside the closed box `[lo_i, hi_i]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Feasible points whose lattice neighbours are all feasible; the
    /// n-dimensional stand-in for a band at the reachable-set boundary.
    FeasibleInterior,
}

impl Exclusion {
    /// Symmetric 1D band: keeps `|ξ| ≤ (1 − fraction)·x1`.
    pub fn band_1d(x1: f64, fraction: f64) -> Self {
        let r = (1.0 - fraction) * x1;
        Exclusion::Box {
            lo: vec![-r],
            hi: vec![r],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub max_adjacent_jump: f64,
    /// Lattice-adjacent included pairs examined.
    pub pairs: usize,
    /// Infeasible points with feasible lattice neighbours on both sides
    /// along some axis.
    pub holes: Vec<usize>,
    /// Grid step of the table.
    pub step: f64,
}

fn included(table: &ValueTable, exclusion: &Exclusion) -> Vec<bool> {
    let spec = &table.spec;
    (0..table.len())
        .map(|i| {
            if table.values[i].is_none() {
                return false;
            }
            match exclusion {
                Exclusion::None => true,
                Exclusion::Box { lo, hi } => table.grid[i]
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (l, h))| *l <= *x && *x <= *h),
                Exclusion::FeasibleInterior => {
                    let idx = spec.unflatten(i);
                    (0..spec.dim()).all(|d| {
                        let mut ok = true;
                        for delta in [-1i64, 1] {
                            let j = idx[d] as i64 + delta;
                            if j < 0 || j >= spec.axes[d].count as i64 {
                                continue;
                            }
                            let mut nb = idx.clone();
                            nb[d] = j as usize;
                            ok &= table.values[spec.flatten(&nb)].is_some();
                        }
                        ok
                    })
                }
            }
        })
        .collect()
}

/// Forward lattice neighbours `(i, j)` with both points accepted by `keep`.
fn adjacent_pairs(table: &ValueTable, keep: &[bool]) -> Vec<(usize, usize)> {
    let spec = &table.spec;
    let mut pairs = Vec::new();
    for i in 0..table.len() {
        if !keep[i] {
            continue;
        }
        let idx = spec.unflatten(i);
        for d in 0..spec.dim() {
            if idx[d] + 1 < spec.axes[d].count {
                let mut nb = idx.clone();
                nb[d] += 1;
                let j = spec.flatten(&nb);
                if keep[j] {
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs
}

fn holes(table: &ValueTable) -> Vec<usize> {
    let spec = &table.spec;
    (0..table.len())
        .filter(|&i| table.values[i].is_none())
        .filter(|&i| {
            let idx = spec.unflatten(i);
            (0..spec.dim()).any(|d| {
                let feasible_at = |k: usize| {
                    let mut nb = idx.clone();
                    nb[d] = k;
                    table.values[spec.flatten(&nb)].is_some()
                };
                (0..idx[d]).any(feasible_at) && (idx[d] + 1..spec.axes[d].count).any(feasible_at)
            })
        })
        .collect()
}

fn max_jump(table: &ValueTable, pairs: &[(usize, usize)]) -> f64 {
    pairs
        .iter()
        .map(|&(i, j)| (table.values[i].unwrap() - table.values[j].unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Largest `|V_i − V_j|` over lattice-adjacent included feasible pairs.
pub fn continuity_report(table: &ValueTable, exclusion: &Exclusion) -> Result<ContinuityReport> {
    if table.feasible_count() < 2 {
        return Err(Error::DegenerateTable(format!(
            "{} feasible point(s); need at least 2",
            table.feasible_count()
        )));
    }
    let keep = included(table, exclusion);
    let pairs = adjacent_pairs(table, &keep);
    if pairs.is_empty() {
        return Err(Error::DegenerateTable(
            "no adjacent feasible pairs after exclusion".into(),
        ));
    }
    Ok(ContinuityReport {
        max_adjacent_jump: max_jump(table, &pairs),
        pairs: pairs.len(),
        holes: holes(table),
        step: table.spec.step(),
    })
}

/// `(h, max jump)` per table, each measured over the common hull of the
/// points every table includes.
pub fn modulus_curve(tables: &[ValueTable], exclusion: &Exclusion) -> Result<Vec<(f64, f64)>> {
    let Some(first) = tables.first() else {
        return Err(Error::DegenerateTable("no tables".into()));
    };
    let n = first.dim();
    if tables.iter().any(|t| t.dim() != n) {
        return Err(Error::Dimension("tables differ in dimension".into()));
    }
    let keeps: Vec<Vec<bool>> = tables.iter().map(|t| included(t, exclusion)).collect();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for (t, keep) in tables.iter().zip(&keeps) {
        let mut tlo = vec![f64::INFINITY; n];
        let mut thi = vec![f64::NEG_INFINITY; n];
        for (p, _) in t.grid.iter().zip(keep).filter(|(_, &k)| k) {
            for d in 0..n {
                tlo[d] = tlo[d].min(p[d]);
                thi[d] = thi[d].max(p[d]);
            }
        }
        for d in 0..n {
            lo[d] = lo[d].max(tlo[d]);
            hi[d] = hi[d].min(thi[d]);
        }
    }
    // lattice coordinates are rounded to twelve digits in CSV round trips
    let eps: Vec<f64> = (0..n)
        .map(|d| 1e-9 * (1.0 + lo[d].abs().max(hi[d].abs())))
        .collect();
    tables
        .iter()
        .zip(keeps)
        .map(|(t, keep)| {
            let keep: Vec<bool> = keep
                .iter()
                .zip(&t.grid)
                .map(|(&k, p)| {
                    k && p
                        .iter()
                        .enumerate()
                        .all(|(d, x)| lo[d] - eps[d] <= *x && *x <= hi[d] + eps[d])
                })
                .collect();
            let pairs = adjacent_pairs(t, &keep);
            if pairs.is_empty() {
                return Err(Error::DegenerateTable(
                    "no adjacent pairs in the common region".into(),
                ));
            }
            Ok((t.spec.step(), max_jump(t, &pairs)))
        })
        .collect()
}

/// Successive jump ratios `jump(h_{k+1}) / jump(h_k)` along a curve.
pub fn refinement_ratios(curve: &[(f64, f64)]) -> Vec<f64> {
    curve
        .windows(2)
        .map(|w| if w[0].1 == 0.0 { 0.0 } else { w[1].1 / w[0].1 })
        .collect()
}

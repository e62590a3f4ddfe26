//! Value-function tables over axis-aligned lattices of initial states.

use std::io::{Read, Write};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpTranscription};
use crate::model::{CellGrid, LtiSystem};
use crate::numfmt::sig12;
use crate::shooting::dead_zone;

/// Default lattice size for one-dimensional sweeps.
pub const DEFAULT_1D_COUNT: usize = 201;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument(
                "axis count must be at least 1".into(),
            ));
        }
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::InvalidArgument(format!(
                "axis range must satisfy min <= max, got {min}:{max}"
            )));
        }
        Ok(AxisSpec { min, max, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            return self.min;
        }
        if i == 0 {
            return self.min;
        }
        if i + 1 == self.count {
            return self.max;
        }
        let last = (self.count - 1) as f64;
        (self.min * (last - i as f64) + self.max * i as f64) / last
    }

    pub fn step(&self) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        Ok(GridSpec { axes })
    }

    /// Parses `min:max:count[,min:max:count...]`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        let axes =
            text.split(',')
                .map(|part| {
                    let fields: Vec<&str> = part.trim().split(':').collect();
                    if fields.len() != 3 {
                        return Err(Error::InvalidArgument(format!(
                            "axis `{part}` is not min:max:count"
                        )));
                    }
                    let num = |s: &str| {
                        s.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidArgument(format!("bad number `{s}` in grid"))
                        })
                    };
                    let count = fields[2].trim().parse::<usize>().map_err(|_| {
                        Error::InvalidArgument(format!("bad count `{}`", fields[2]))
                    })?;
                    AxisSpec::new(num(fields[0])?, num(fields[1])?, count)
                })
                .collect::<Result<Vec<_>>>()?;
        GridSpec::new(axes)
    }

    /// Symmetric box `[-w_i, w_i]` with `count` points per axis.
    pub fn symmetric(half_widths: &[f64], count: usize) -> Result<Self> {
        GridSpec::new(
            half_widths
                .iter()
                .map(|&w| AxisSpec::new(-w, w, count))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice index of a flat row-major position (first axis slowest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            idx[d] = flat % axis.count;
            flat /= axis.count;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.count + i)
    }

    /// All lattice points in row-major order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|flat| {
                self.unflatten(flat)
                    .iter()
                    .zip(&self.axes)
                    .map(|(&i, axis)| axis.value(i))
                    .collect()
            })
            .collect()
    }

    /// Largest axis step.
    pub fn step(&self) -> f64 {
        self.axes.iter().map(AxisSpec::step).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    /// SHA-256 of the system's canonical JSON, empty if unknown.
    pub system_hash: String,
    /// Seconds since the Unix epoch at creation; not serialized.
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub spec: GridSpec,
    pub grid: Vec<Vec<f64>>,
    /// `None` marks an infeasible (or failed) point.
    pub values: Vec<Option<f64>>,
    pub cells: usize,
    /// Points whose solve errored, with the message.
    pub failures: Vec<(usize, String)>,
    pub meta: TableMeta,
}

pub fn system_hash(sys: &LtiSystem) -> String {
    hex::encode(Sha256::digest(sys.to_json().to_string().as_bytes()))
}

impl ValueTable {
    /// Builds a table from values already computed on `spec`'s lattice.
    pub fn from_values(spec: GridSpec, values: Vec<Option<f64>>, cells: usize) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Dimension(format!(
                "{} values for a lattice of {} points",
                values.len(),
                spec.len()
            )));
        }
        Ok(ValueTable {
            grid: spec.points(),
            spec,
            values,
            cells,
            failures: Vec::new(),
            meta: TableMeta {
                system_hash: String::new(),
                created_unix: 0,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn feasible_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .flatten()
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    /// CSV with header `xi_1,...,xi_n,V,feasible`, rows in lattice order,
    /// twelve significant digits, empty `V` when infeasible.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("xi_{i}")).collect();
        header.push("V".into());
        header.push("feasible".into());
        w.write_record(&header)?;
        for (point, value) in self.grid.iter().zip(&self.values) {
            let mut rec: Vec<String> = point.iter().map(|&x| sig12(x)).collect();
            rec.push(value.map(sig12).unwrap_or_default());
            rec.push(value.is_some().to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the CSV written by [`ValueTable::write_csv`]. The lattice is
    /// recovered from the distinct coordinates on each axis.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        let ncols = header.len();
        if ncols < 3
            || &header[ncols - 2] != "V"
            || &header[ncols - 1] != "feasible"
            || (0..ncols - 2).any(|i| header[i] != *format!("xi_{}", i + 1))
        {
            return Err(Error::Parse(format!(
                "expected header xi_1,...,xi_n,V,feasible, got {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let n = ncols - 2;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: bad number `{s}`", line + 2)))
            };
            let point = (0..n).map(|i| num(&rec[i])).collect::<Result<Vec<_>>>()?;
            let feasible = match rec[n + 1].trim() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Parse(format!(
                        "row {}: feasible must be true/false, got `{other}`",
                        line + 2
                    )))
                }
            };
            let value = if feasible { Some(num(&rec[n])?) } else { None };
            grid.push(point);
            values.push(value);
        }
        if grid.is_empty() {
            return Err(Error::Parse("table has no rows".into()));
        }
        let axes = (0..n)
            .map(|d| {
                let mut coords: Vec<f64> = grid.iter().map(|p| p[d]).collect();
                coords.sort_by(f64::total_cmp);
                coords.dedup();
                AxisSpec::new(coords[0], *coords.last().unwrap(), coords.len())
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = GridSpec::new(axes)?;
        if spec.len() != grid.len() {
            return Err(Error::Parse(format!(
                "rows do not form a full lattice ({} rows, {} lattice points)",
                grid.len(),
                spec.len()
            )));
        }
        Ok(ValueTable {
            spec,
            grid,
            values,
            cells: 0,
            failures: Vec::new(),
            meta: TableMeta {
                system_hash: String::new(),
                created_unix: 0,
            },
        })
    }
}

/// LP value at every lattice point. Points are solved in parallel on the
/// current rayon pool; output order is the lattice order.
pub fn sweep(sys: &LtiSystem, spec: &GridSpec, cells: usize) -> Result<ValueTable> {
    if spec.dim() != sys.dim() {
        return Err(Error::Dimension(format!(
            "grid has {} axes, system dimension is {}",
            spec.dim(),
            sys.dim()
        )));
    }
    if spec.is_empty() {
        return Err(Error::InvalidArgument("grid is empty".into()));
    }
    let cell_grid = Arc::new(CellGrid::new(sys, cells)?);
    let points = spec.points();
    let outcomes: Vec<Result<Option<f64>>> = points
        .par_iter()
        .map(|xi| {
            let t = LpTranscription::new(cell_grid.clone(), xi.clone())?;
            let r = solve_lp(&t)?;
            Ok(r.feasible().then_some(r.value))
        })
        .collect();
    let mut values = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => values.push(v),
            Err(e) => {
                failures.push((i, e.to_string()));
                values.push(None);
            }
        }
    }
    Ok(ValueTable {
        spec: spec.clone(),
        grid: points,
        values,
        cells,
        failures,
        meta: TableMeta {
            system_hash: system_hash(sys),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    })
}

/// [`sweep`] on a dedicated pool of `jobs` threads.
pub fn sweep_with_jobs(
    sys: &LtiSystem,
    spec: &GridSpec,
    cells: usize,
    jobs: usize,
) -> Result<ValueTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| sweep(sys, spec, cells))
}

/// Initial states that are steerable on `grid` by construction: each is
/// `-Σ G_k u_k` for the grid-extremal control `u_k = dez(λ cᵀG_k / dt)` with
/// a random direction `c` and log-uniform gain `λ`.
pub fn sample_feasible_states(grid: &CellGrid, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.dim();
    let dt = grid.dt();
    // gain range where the dead zone goes from never to almost always active
    let peak = grid
        .columns()
        .iter()
        .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt() / dt)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let (lo, hi) = ((0.8 / peak).ln(), (50.0 / peak).ln());
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let len = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let gain = (lo + (hi - lo) * rng.random::<f64>()).exp() / len;
            let u: Vec<f64> = grid
                .columns()
                .iter()
                .map(|g| dead_zone(gain * g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / dt))
                .collect();
            grid.apply(&u).iter().map(|v| -v).collect()
        })
        .collect()
}

//! Command-line front end. Commands write data to a file or standard output
//! and messages to standard error; the returned code follows one contract
//! for every command: 0 success, 1 usage or internal error, 2 infeasible or
//! out of range.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::analysis::continuity::{modulus_curve, refinement_ratios, Exclusion};
use crate::analysis::crosscheck::cross_check;
use crate::analysis::levelset::level_set_suite;
use crate::analysis::oracle::Oracle1dParams;
use crate::analysis::table::{
    sample_feasible_states, sweep, GridSpec, ValueTable, DEFAULT_1D_COUNT,
};
use crate::error::{Error, Result};
use crate::lp::{solve_lp_with, LpOptions, LpTranscription, SolveResult};
use crate::model::{CellGrid, LtiSystem, DEFAULT_ZERO_TOL};
use crate::numfmt::sig12;
use crate::plot::render_value_svg;
use crate::shooting::{default_seeds, shoot_solve, CostateSeed, ShootOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

/// Lattice points per axis for default sweeps of systems with n > 1.
pub const DEFAULT_ND_COUNT: usize = 21;

/// Refinement ratio the continuity check must stay under.
pub const CONTINUITY_RATIO: f64 = 0.75;

/// Share of cross-checked states on which LP and shooting must agree.
pub const AGREEMENT_FRACTION: f64 = 0.9;

#[derive(Debug, Parser)]
#[command(
    name = "handsoff",
    version,
    about = "Sparse (maximum hands-off) control of single-input LTI systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lp,
    Shoot,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one steering problem and write the result as JSON.
    Solve(SolveArgs),
    /// Tabulate the value function on a lattice and write CSV.
    Sweep(SweepArgs),
    /// Run the invariant suite and print a pass/fail table.
    Check(CheckArgs),
    /// Render a 1D value table as SVG.
    Plot(PlotArgs),
    /// Closed-form values for the scalar system `ẋ = a x + b u`.
    Oracle1d(OracleArgs),
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Initial state as comma-separated reals.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: String,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub cells: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Lp)]
    pub method: MethodArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shoot even when the system fails Assumption 1.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// `min:max:count` per axis, comma separated. Defaults to the grid
    /// reachable box.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub cells: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub cells: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Run the suite on a system that fails Assumption 1.
    #[arg(long)]
    pub force: bool,
    /// Also write the full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct PlotArgs {
    /// Value table CSV as written by `sweep`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long = "T", allow_hyphen_values = true)]
    pub horizon: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: f64,
}

/// Runs a parsed command; messages go to `err`, data to `--out` or `out`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Check(a) => cmd_check(&a, out, err),
        Command::Plot(a) => cmd_plot(&a, out, err),
        Command::Oracle1d(a) => cmd_oracle1d(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::OutOfReachableSet { .. } => EXIT_INFEASIBLE,
                _ => EXIT_ERROR,
            }
        }
    }
}

/// Parses `"1.0"` or `"0.5,-0.25"`.
pub fn parse_xi(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("bad initial-state component {s:?}")))
        })
        .collect()
}

fn emit(path: Option<&Path>, data: &[u8], out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, data).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(data)?),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(f),
    }
}

/// A finite number rounded to twelve significant digits, else `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(sig12(x).parse::<f64>().expect("sig12 output parses"))
    } else {
        Value::Null
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn result_fields(r: &SolveResult, cells: usize) -> Result<Map<String, Value>> {
    let mut m = Map::new();
    m.insert("status".into(), json!(r.status));
    m.insert("method".into(), json!(r.method));
    m.insert("value_l1".into(), num(r.value));
    m.insert("value_l0".into(), num(r.value_l0));
    m.insert("fractional_cells".into(), json!(r.fractional_cells));
    m.insert("residual".into(), num(r.residual));
    let control = match &r.switching {
        Some(s) => {
            m.insert("switching_times".into(), nums(&s.times));
            m.insert("switching_levels".into(), json!(s.levels));
            s.sample(cells)?.values().to_vec()
        }
        None if r.feasible() => r.control.values().to_vec(),
        None => Vec::new(),
    };
    m.insert("control".into(), nums(&control));
    Ok(m)
}

fn shoot_with_lp_seed(
    sys: &LtiSystem,
    xi: &[f64],
    lp: &SolveResult,
    opts: &ShootOptions,
) -> Result<crate::shooting::ShootOutcome> {
    let mut seeds = Vec::with_capacity(opts.starts + 1);
    if let Some(p) = &lp.costate_estimate {
        seeds.push(CostateSeed(p.clone()));
    }
    seeds.extend(default_seeds(sys, opts.starts, opts.seed));
    shoot_solve(sys, xi, &seeds, opts)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sys = LtiSystem::load(&args.system)?;
    let xi = parse_xi(&args.xi)?;
    let cells = args.cells as usize;
    if args.zero_tol.is_nan() || args.zero_tol < 0.0 {
        return Err(Error::InvalidArgument(
            "--zero-tol must be non-negative".into(),
        ));
    }
    let shoot_opts = ShootOptions {
        seed: args.seed,
        force: args.force,
        ..ShootOptions::default()
    };
    if args.method != MethodArg::Lp && !sys.assumption1().normal && !args.force {
        return Err(Error::NotNormal(
            sys.assumption1().failure_reason().unwrap_or_default(),
        ));
    }
    let grid = Arc::new(CellGrid::new(&sys, cells)?);
    let t = LpTranscription::new(grid, xi.clone())?;
    let lp_opts = LpOptions {
        zero_tol: args.zero_tol,
        ..LpOptions::default()
    };
    let lp = solve_lp_with(&t, &lp_opts)?;

    let mut doc = match args.method {
        MethodArg::Lp => result_fields(&lp, cells)?,
        MethodArg::Shoot if !lp.feasible() => result_fields(&lp, cells)?,
        MethodArg::Shoot => {
            let shot = shoot_with_lp_seed(&sys, &xi, &lp, &shoot_opts)?;
            if shot.converged {
                result_fields(&shot.result, cells)?
            } else {
                let _ = writeln!(
                    err,
                    "warning: shooting did not converge after {} start(s) (best residual {}); reporting the LP solution",
                    shot.starts_tried,
                    sig12(shot.result.residual)
                );
                let mut m = result_fields(&lp, cells)?;
                m.insert("shoot_status".into(), json!(shot.result.status));
                m
            }
        }
        MethodArg::Both => {
            let mut m = result_fields(&lp, cells)?;
            m.insert("method".into(), json!("both"));
            if lp.feasible() {
                let shot = shoot_with_lp_seed(&sys, &xi, &lp, &shoot_opts)?;
                let n = sys.dim() as f64;
                let tolerance = (2.0 * n * t.dt()).max(1e-6);
                let agree = shot.converged && (shot.result.value - lp.value).abs() <= tolerance;
                if !shot.converged {
                    let _ = writeln!(err, "warning: shooting did not converge");
                }
                m.insert(
                    "shoot".into(),
                    Value::Object(result_fields(&shot.result, cells)?),
                );
                m.insert("agree".into(), json!(agree));
                m.insert("agree_tolerance".into(), num(tolerance));
            }
            m
        }
    };
    doc.insert("xi".into(), nums(&xi));
    doc.insert("seed".into(), json!(args.seed));
    doc.insert("cells".into(), json!(cells));
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))
        .map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    emit(args.out.as_deref(), text.as_bytes(), out)?;
    Ok(if lp.feasible() {
        EXIT_OK
    } else {
        let _ = writeln!(
            err,
            "initial state is outside the reachable set on this grid"
        );
        EXIT_INFEASIBLE
    })
}

/// The grid reachable box with `201` points in 1D, `21` per axis otherwise.
pub fn default_grid(sys: &LtiSystem, cells: usize) -> Result<GridSpec> {
    let grid = CellGrid::new(sys, cells)?;
    let count = if sys.dim() == 1 {
        DEFAULT_1D_COUNT
    } else {
        DEFAULT_ND_COUNT
    };
    GridSpec::symmetric(&grid.reach_box(), count)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sys = LtiSystem::load(&args.system)?;
    let cells = args.cells as usize;
    let spec = match &args.grid {
        Some(text) => GridSpec::parse(text)?,
        None => default_grid(&sys, cells)?,
    };
    let table = with_jobs(args.jobs, || sweep(&sys, &spec, cells))?;
    for (i, msg) in &table.failures {
        let _ = writeln!(err, "point {i}: {msg}");
    }
    let csv = table.to_csv_string()?;
    emit(args.out.as_deref(), csv.as_bytes(), out)?;
    let range = match table.value_range() {
        Some((lo, hi)) => format!("min V {}, max V {}", sig12(lo), sig12(hi)),
        None => "no feasible points".into(),
    };
    let _ = writeln!(
        err,
        "feasible {}/{}; {range}; seed {}",
        table.feasible_count(),
        table.len(),
        args.seed
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The full invariant suite. Refuses non-normal systems unless `force`.
pub fn check_suite(sys: &LtiSystem, cells: usize, seed: u64, force: bool) -> Result<Vec<CheckRow>> {
    let gate = sys.assumption1();
    if !gate.normal && !force {
        return Err(Error::NotNormal(format!(
            "{}; rerun with --force to run the suite anyway",
            gate.failure_reason().unwrap_or_default()
        )));
    }
    let mut rows = vec![CheckRow {
        name: "assumption 1 (normality)".into(),
        passed: gate.normal,
        detail: gate.to_string(),
    }];

    let grid = CellGrid::new(sys, cells)?;
    let reach = grid.reach_box();
    let n = sys.dim();
    let horizon = sys.horizon();

    // level sets
    let alphas = [0.0, horizon / 5.0, horizon / 2.0, horizon];
    let probe = GridSpec::symmetric(
        &reach.iter().map(|r| 1.1 * r).collect::<Vec<_>>(),
        if n == 1 { 13 } else { 5 },
    )?;
    let report = level_set_suite(sys, &alphas, &probe.points(), cells)?;
    for c in &report.checks {
        rows.push(CheckRow {
            name: format!("level sets: {}", c.name),
            passed: c.passed,
            detail: format!("slack {}; {}", sig12(c.slack), c.detail),
        });
    }

    // continuity under refinement
    let (counts, exclusion): (Vec<usize>, Exclusion) = if n == 1 {
        (vec![101, 201, 401], Exclusion::band_1d(reach[0], 1e-3))
    } else {
        (vec![11, 21], Exclusion::FeasibleInterior)
    };
    let tables = counts
        .iter()
        .map(|&c| sweep(sys, &GridSpec::symmetric(&reach, c)?, cells))
        .collect::<Result<Vec<ValueTable>>>()?;
    let holes: usize = tables
        .iter()
        .map(|t| crate::analysis::continuity::continuity_report(t, &Exclusion::None))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .map(|r| r.holes.len())
        .sum();
    let curve = modulus_curve(&tables, &exclusion)?;
    let ratios = refinement_ratios(&curve);
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    rows.push(CheckRow {
        name: "continuity: modulus ratio".into(),
        passed: worst <= CONTINUITY_RATIO && holes == 0,
        detail: format!(
            "jumps {:?}, ratios {:?}, holes {holes}",
            curve.iter().map(|c| sig12(c.1)).collect::<Vec<_>>(),
            ratios.iter().map(|r| sig12(*r)).collect::<Vec<_>>()
        ),
    });

    // LP versus shooting
    let xis = sample_feasible_states(&grid, 20, seed);
    let opts = ShootOptions {
        seed,
        force,
        ..ShootOptions::default()
    };
    let cc = cross_check(sys, &xis, cells, &opts)?;
    let frac = cc.agreement_fraction();
    rows.push(CheckRow {
        name: "cross-check: LP vs shooting".into(),
        passed: frac >= AGREEMENT_FRACTION && cc.converged_disagreements() == 0,
        detail: format!(
            "agree on {}/{} within {}; {} converged disagreement(s); {} unconverged",
            cc.rows.iter().filter(|r| r.agree).count(),
            cc.rows.len(),
            sig12(cc.tolerance),
            cc.converged_disagreements(),
            cc.rows.iter().filter(|r| !r.shoot_converged).count()
        ),
    });
    let worst_gap = cc.rows.iter().map(|r| r.lp_gap).fold(0.0, f64::max);
    rows.push(CheckRow {
        name: "gap: LP l0 - l1 <= (n+1) dt".into(),
        passed: cc.gap_bound_holds(),
        detail: format!(
            "worst {} vs bound {}",
            sig12(worst_gap),
            sig12(cc.gap_bound)
        ),
    });
    rows.push(CheckRow {
        name: "gap: shooting l0 == l1".into(),
        passed: cc.shoot_exact_holds(),
        detail: format!(
            "{} converged solution(s)",
            cc.rows.iter().filter(|r| r.shoot_converged).count()
        ),
    });
    Ok(rows)
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sys = LtiSystem::load(&args.system)?;
    if args.force && !sys.assumption1().normal {
        let _ = writeln!(
            err,
            "warning: {}; running the suite because of --force",
            sys.assumption1().failure_reason().unwrap_or_default()
        );
    }
    let rows = with_jobs(args.jobs, || {
        check_suite(&sys, args.cells as usize, args.seed, args.force)
    })?;
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut table = String::new();
    for r in &rows {
        table.push_str(&format!(
            "{}  {:<width$}  {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        ));
    }
    out.write_all(table.as_bytes())?;
    let all = rows.iter().all(|r| r.passed);
    if let Some(path) = &args.out {
        let doc = json!({
            "passed": all,
            "cells": args.cells,
            "seed": args.seed,
            "checks": rows,
        });
        let mut text =
            serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        emit(Some(path), text.as_bytes(), out)?;
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    let _ = writeln!(
        err,
        "{} of {} checks passed",
        rows.len() - failed,
        rows.len()
    );
    Ok(if all { EXIT_OK } else { EXIT_ERROR })
}

pub fn cmd_plot(args: &PlotArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    let table = ValueTable::read_csv(file)?;
    let (svg, warnings) = render_value_svg(&table)?;
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    emit(args.out.as_deref(), svg.as_bytes(), out)?;
    Ok(EXIT_OK)
}

pub fn cmd_oracle1d(args: &OracleArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32> {
    let p = Oracle1dParams::new(args.a, args.b, args.horizon)?;
    let doc = json!({
        "x1": num(p.x1()),
        "V0": num(p.value(args.xi)?),
        "tau": num(p.tau(args.xi)?),
        "level": p.level(args.xi)?,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

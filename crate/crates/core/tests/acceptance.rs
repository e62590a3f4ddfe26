//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use handsoff::analysis::continuity::{modulus_curve, refinement_ratios, Exclusion};
use handsoff::analysis::crosscheck::{cross_check, CrossCheckReport};
use handsoff::analysis::levelset::level_set_suite;
use handsoff::analysis::oracle::Oracle1dParams;
use handsoff::analysis::table::{sample_feasible_states, sweep, sweep_with_jobs, GridSpec};
use handsoff::linalg::{cell_integral, expm, Matrix};
use handsoff::model::{CellGrid, ControlSignal, LtiSystem};
use handsoff::shooting::ShootOptions;
use handsoff::value_l1;

const CELLS: usize = 2000;
const SEED: u64 = 2024;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scalar() -> LtiSystem {
    LtiSystem::scalar(1.0, 2.0, 5.0).unwrap()
}

fn oscillator() -> LtiSystem {
    LtiSystem::new(
        Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap(),
        Matrix::column_vector(&[0.0, 1.0]).unwrap(),
        2.0 * std::f64::consts::PI,
    )
    .unwrap()
}

fn oracle() -> Oracle1dParams {
    Oracle1dParams::new(1.0, 2.0, 5.0).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Value-function reproduction on 201 points against the closed form.
fn value_function_reproduction() -> Outcome {
    let p = oracle();
    let x1 = p.x1();
    let spec = GridSpec::parse(&format!("{}:{}:201", -x1, x1)).unwrap();
    let start = Instant::now();
    let table = sweep(&scalar(), &spec, CELLS).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (xi, v) in table.grid.iter().zip(&table.values) {
        if xi[0].abs() > 0.999 * x1 {
            continue;
        }
        let v = v.ok_or(format!("xi = {} reported infeasible", xi[0]))?;
        worst = worst.max((v - p.value(xi[0]).unwrap()).abs());
        compared += 1;
    }
    ensure(
        worst <= 5e-3 && table.feasible_count() == 201,
        format!(
            "max |V_LP - V_oracle| = {worst:.3e} over {compared} points (<= 5e-3), {elapsed:.2} s"
        ),
    )
}

/// The value at the reachable-set boundary equals the horizon.
fn boundary_equals_horizon() -> Outcome {
    let p = oracle();
    let x1 = p.x1();
    let exact = p.value(x1).unwrap() == 5.0 && p.value(-x1).unwrap() == 5.0;
    let want = -(1.0 - 0.999 * -(-5f64).exp_m1()).ln();
    let tol = 2.0 * 5.0 / CELLS as f64 + 1e-6;
    let mut worst = 0.0f64;
    for xi in [0.999 * x1, -0.999 * x1] {
        let v = value_l1(&scalar(), &[xi], CELLS)
            .map_err(|e| e.to_string())?
            .ok_or("near-boundary state reported infeasible")?;
        worst = worst.max((v - want).abs());
    }
    ensure(
        exact && worst <= tol,
        format!("oracle(+-x1) == T: {exact}; LP at +-0.999 x1 off by {worst:.3e} from {want:.6} (<= {tol:.3e})"),
    )
}

fn systems() -> [(&'static str, LtiSystem); 2] {
    [("scalar", scalar()), ("oscillator", oscillator())]
}

fn report(sys: &LtiSystem, count: usize) -> Result<CrossCheckReport, String> {
    let grid = CellGrid::new(sys, CELLS).map_err(|e| e.to_string())?;
    let xis = sample_feasible_states(&grid, count, SEED);
    let opts = ShootOptions {
        seed: SEED,
        ..ShootOptions::default()
    };
    cross_check(sys, &xis, CELLS, &opts).map_err(|e| e.to_string())
}

/// LP vertices are nearly sparse; converged shooting controls exactly so.
fn gap_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, sys) in systems() {
        let r = report(&sys, 50)?;
        let worst = r.rows.iter().map(|row| row.lp_gap).fold(0.0, f64::max);
        let converged = r.rows.iter().filter(|row| row.shoot_converged).count();
        let feasible = r.rows.iter().filter(|row| row.value_lp.is_some()).count();
        ok &= r.gap_bound_holds() && r.shoot_exact_holds() && feasible == r.rows.len();
        parts.push(format!(
            "{name}: LP gap {worst:.2e} <= {:.2e} on {feasible}/50, shooting l0 == l1 on {converged} converged",
            r.gap_bound
        ));
    }
    ensure(ok, parts.join("; "))
}

/// LP and shooting agree on most states and never disagree silently.
fn cross_method_oracle() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, sys) in systems() {
        let r = report(&sys, 20)?;
        let agree = r.rows.iter().filter(|row| row.agree).count();
        let unconverged = r.rows.iter().filter(|row| !row.shoot_converged).count();
        ok &= r.agreement_fraction() >= 0.9 && r.converged_disagreements() == 0;
        parts.push(format!(
            "{name}: {agree}/20 agree within {:.3e}, {unconverged} flagged unconverged, {} silent disagreements",
            r.tolerance,
            r.converged_disagreements()
        ));
    }
    ensure(ok, parts.join("; "))
}

/// All five sublevel-set checks on both systems.
fn level_sets() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, sys) in systems() {
        let t = sys.horizon();
        let grid = CellGrid::new(&sys, CELLS).map_err(|e| e.to_string())?;
        let reach: Vec<f64> = grid.reach_box().iter().map(|r| 1.1 * r).collect();
        let count = if sys.dim() == 1 { 13 } else { 5 };
        let probe = GridSpec::symmetric(&reach, count).map_err(|e| e.to_string())?;
        let mut xis = probe.points();
        xis.extend(sample_feasible_states(&grid, 10, SEED));
        let rep = level_set_suite(&sys, &[0.0, t / 5.0, t / 2.0, t], &xis, CELLS)
            .map_err(|e| e.to_string())?;
        ok &= rep.all_passed() && rep.checks.len() == 5;
        let failed: Vec<&str> = rep
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        parts.push(format!(
            "{name}: {}/5 over {} states{}",
            rep.checks.len() - failed.len(),
            xis.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(" (failed: {})", failed.join(", "))
            }
        ));
    }
    ensure(ok, parts.join("; "))
}

/// Halving the grid step shrinks the largest adjacent jump by at least 25%.
fn continuity_modulus() -> Outcome {
    let x1 = oracle().x1();
    let tables = [101, 201, 401]
        .iter()
        .map(|&count| {
            let spec = GridSpec::parse(&format!("{}:{}:{count}", -x1, x1)).unwrap();
            sweep(&scalar(), &spec, CELLS)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let curve = modulus_curve(&tables, &Exclusion::band_1d(x1, 1e-3)).map_err(|e| e.to_string())?;
    let ratios = refinement_ratios(&curve);
    ensure(
        ratios.len() == 2 && ratios.iter().all(|r| *r <= 0.75),
        format!(
            "jumps at h = x1/50, x1/100, x1/200: {:?}; ratios {:?} (<= 0.75)",
            curve
                .iter()
                .map(|c| format!("{:.4}", c.1))
                .collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
        ),
    )
}

/// Matrix exponential, cell integrals and the norm inequality.
fn kernel_accuracy() -> Outcome {
    let omega = 1.7;
    let a = Matrix::from_rows(&[vec![0.0, omega], vec![-omega, 0.0]]).unwrap();
    let mut rot_err = 0.0f64;
    for k in 0..=40 {
        let t = -10.0 + 0.5 * k as f64;
        let e = expm(&a, t).map_err(|e| e.to_string())?;
        let (c, s) = ((omega * t).cos(), (omega * t).sin());
        for (i, want) in [c, s, -s, c].into_iter().enumerate() {
            rot_err = rot_err.max((e.as_slice()[i] - want).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut add_err = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let a = Matrix::new(
            n,
            n,
            (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let b = Matrix::column_vector(
            &(0..n)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let t0 = rng.random_range(-2.0..2.0);
        let t1 = t0 + rng.random_range(0.01..2.0);
        let t2 = t1 + rng.random_range(0.01..2.0);
        let whole = cell_integral(&a, &b, t0, t2).map_err(|e| e.to_string())?;
        let l = cell_integral(&a, &b, t0, t1).map_err(|e| e.to_string())?;
        let r = cell_integral(&a, &b, t1, t2).map_err(|e| e.to_string())?;
        for i in 0..n {
            add_err = add_err.max((whole[i] - l[i] - r[i]).abs());
        }
    }

    let mut violations = 0;
    for _ in 0..1000 {
        let cells = rng.random_range(1..=300);
        let values: Vec<f64> = (0..cells)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                2 => -1.0,
                _ => rng.random_range(-1.0..=1.0),
            })
            .collect();
        let u =
            ControlSignal::new(rng.random_range(0.1..10.0), values).map_err(|e| e.to_string())?;
        let (l1, l0) = (u.l1_norm(), u.l0_norm(0.0));
        if l1.is_nan() || l1 > l0 {
            violations += 1;
        }
    }
    ensure(
        rot_err <= 1e-10 && add_err <= 1e-10 && violations == 0,
        format!(
            "rotation error {rot_err:.2e}, additivity error {add_err:.2e} (<= 1e-10), l1 > l0 on {violations}/1000 signals"
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_handsoff"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

/// Two identical runs give byte-identical CSV, JSON and SVG.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scalar_path = dir.path().join("scalar.json");
    let osc_path = dir.path().join("oscillator.json");
    std::fs::write(&scalar_path, scalar().to_json().to_string()).map_err(|e| e.to_string())?;
    std::fs::write(&osc_path, oscillator().to_json().to_string()).map_err(|e| e.to_string())?;
    let p = |path: &Path| path.to_str().unwrap().to_string();
    let seed = SEED.to_string();

    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run in 0..2 {
        let csv = dir.path().join(format!("table{run}.csv"));
        let svg = dir.path().join(format!("plot{run}.svg"));
        let mut files = Vec::new();
        run_cli(&[
            "sweep",
            "--system",
            &p(&scalar_path),
            "--out",
            &p(&csv),
            "--seed",
            &seed,
        ])?;
        files.push(std::fs::read(&csv).map_err(|e| e.to_string())?);
        run_cli(&["plot", "--input", &p(&csv), "--out", &p(&svg)])?;
        files.push(std::fs::read(&svg).map_err(|e| e.to_string())?);
        files.push(run_cli(&[
            "solve",
            "--system",
            &p(&osc_path),
            "--xi",
            "0.5,-0.3",
            "--method",
            "both",
            "--seed",
            &seed,
        ])?);
        files.push(run_cli(&[
            "solve",
            "--system",
            &p(&scalar_path),
            "--xi",
            "-1.2",
            "--method",
            "shoot",
            "--seed",
            &seed,
        ])?);
        files.push(run_cli(&[
            "sweep",
            "--system",
            &p(&osc_path),
            "--grid",
            "-2:2:5,-2:2:5",
            "--cells",
            "400",
        ])?);
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1];

    // parallel and serial sweeps agree byte for byte
    let spec = GridSpec::parse("-2:2:7,-2:2:7").unwrap();
    let serial = sweep_with_jobs(&oscillator(), &spec, 300, 1).map_err(|e| e.to_string())?;
    let parallel = sweep_with_jobs(&oscillator(), &spec, 300, 4).map_err(|e| e.to_string())?;
    let same_jobs = serial.to_csv_string().unwrap() == parallel.to_csv_string().unwrap();

    ensure(
        same && same_jobs,
        format!(
            "{} outputs identical across runs: {same}; 1 vs 4 jobs identical: {same_jobs}",
            outputs[0].len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("value function reproduction", value_function_reproduction),
        ("boundary equals horizon", boundary_equals_horizon),
        ("LP gap bound and exact shooting sparsity", gap_bound),
        ("LP vs shooting agreement", cross_method_oracle),
        ("level-set suite", level_sets),
        ("continuity modulus under refinement", continuity_modulus),
        ("numerical kernel accuracy", kernel_accuracy),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(o) => o,
            Err(panic) => Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.1} s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.1} s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

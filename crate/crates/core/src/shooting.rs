//! Minimum-principle solution path.
//!
//! For a costate seed `p₀` the costate is `p(t) = e^{-Aᵀt} p₀` and the
//! extremal control is `u(t) = -dez(Bᵀp(t))`. The switching function
//! `σ(t) = Bᵀp(t) = (e^{-At}B)ᵀ p₀` is located on a fine pre-scan grid and
//! its crossings of `|σ| = 1` are refined by bisection, so the induced
//! control is exactly piecewise constant with known breakpoints. Shooting
//! adjusts `p₀` until that control steers `ξ` to the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cell_integral, expm, Matrix};
use crate::lp::{Method, SolveResult, SolveStatus};
use crate::model::{ControlSignal, LtiSystem};

/// Residual norm below which a shot counts as converged.
pub const SHOOT_TOL: f64 = 1e-7;
/// Width to which switching instants are bisected.
pub const SWITCH_TOL: f64 = 1e-10;
/// Band around `|σ| = 1` counted as singular by the diagnostic.
pub const SINGULAR_BAND: f64 = 1e-9;

/// Set-valued at `|r| = 1`; this selects 0 there.
pub fn dead_zone(r: f64) -> f64 {
    if r > 1.0 {
        1.0
    } else if r < -1.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostateSeed(pub Vec<f64>);

impl CostateSeed {
    pub fn new(p0: Vec<f64>) -> Result<Self> {
        if p0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("costate seed"));
        }
        Ok(CostateSeed(p0))
    }

    pub fn zeros(n: usize) -> Self {
        CostateSeed(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Bang-off-bang control described by its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchingStructure {
    pub horizon: f64,
    /// Strictly increasing instants in `(0, T)`.
    pub times: Vec<f64>,
    /// One level in `{-1, 0, 1}` per segment; `levels.len() == times.len() + 1`.
    pub levels: Vec<i8>,
}

impl SwitchingStructure {
    /// Builds from raw breakpoints and levels, merging equal neighbours and
    /// dropping empty segments.
    pub fn from_segments(horizon: f64, times: &[f64], levels: &[i8]) -> Self {
        assert_eq!(levels.len(), times.len() + 1);
        let mut out_times: Vec<f64> = Vec::new();
        let mut out_levels: Vec<i8> = vec![levels[0]];
        for (&t, &lvl) in times.iter().zip(&levels[1..]) {
            if t >= horizon {
                // everything after the horizon is empty
                break;
            }
            if t <= 0.0 || out_times.last().is_some_and(|&p| t <= p) {
                // degenerate segment: the new level overrides
                *out_levels.last_mut().unwrap() = lvl;
                continue;
            }
            if lvl == *out_levels.last().unwrap() {
                continue;
            }
            out_times.push(t);
            out_levels.push(lvl);
        }
        // overriding can leave equal neighbours
        let mut times = Vec::new();
        let mut lv = vec![out_levels[0]];
        for (&t, &l) in out_times.iter().zip(&out_levels[1..]) {
            if l != *lv.last().unwrap() {
                times.push(t);
                lv.push(l);
            }
        }
        SwitchingStructure {
            horizon,
            times,
            levels: lv,
        }
    }

    pub fn constant(horizon: f64, level: i8) -> Self {
        SwitchingStructure {
            horizon,
            times: Vec::new(),
            levels: vec![level],
        }
    }

    /// `(start, end, level)` for each segment.
    pub fn segments(&self) -> Vec<(f64, f64, i8)> {
        let mut bounds = Vec::with_capacity(self.times.len() + 2);
        bounds.push(0.0);
        bounds.extend_from_slice(&self.times);
        bounds.push(self.horizon);
        bounds
            .windows(2)
            .zip(&self.levels)
            .map(|(w, &l)| (w[0], w[1], l))
            .collect()
    }

    pub fn level_at(&self, t: f64) -> i8 {
        let idx = self.times.partition_point(|&s| s <= t);
        self.levels[idx]
    }

    pub fn l1_norm(&self) -> f64 {
        self.segments()
            .iter()
            .map(|&(a, b, l)| (b - a) * f64::from(l.abs()))
            .sum()
    }

    pub fn l0_norm(&self) -> f64 {
        self.segments()
            .iter()
            .map(|&(a, b, l)| (b - a) * if l != 0 { 1.0 } else { 0.0 })
            .sum()
    }

    /// Samples the level at each cell midpoint.
    pub fn sample(&self, cells: usize) -> Result<ControlSignal> {
        let dt = self.horizon / cells as f64;
        let values = (0..cells)
            .map(|k| f64::from(self.level_at((k as f64 + 0.5) * dt)))
            .collect();
        ControlSignal::new(self.horizon, values)
    }
}

/// `-dez(Bᵀ e^{-Aᵀt} p₀)`.
pub fn extremal_control(sys: &LtiSystem, seed: &CostateSeed, t: f64) -> Result<f64> {
    if !(0.0..=sys.horizon()).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside [0, {}]",
            sys.horizon()
        )));
    }
    check_seed(sys, seed)?;
    let w = sys.kernel_at(t)?;
    Ok(-dead_zone(dot(&w, seed.as_slice())))
}

fn check_seed(sys: &LtiSystem, seed: &CostateSeed) -> Result<()> {
    if seed.0.len() != sys.dim() {
        return Err(Error::Dimension(format!(
            "costate has length {}, system dimension is {}",
            seed.0.len(),
            sys.dim()
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pre-scan grid of `e^{-At}B`, shared by every shot on one system.
#[derive(Debug, Clone)]
pub struct ShootingKernel {
    a: Matrix,
    b: Matrix,
    horizon: f64,
    times: Vec<f64>,
    kernel: Vec<Vec<f64>>,
}

/// Switching structure induced by a seed, plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub structure: SwitchingStructure,
    /// Some pre-scan extremum of `|σ| - 1` came within 1e-6 of zero without
    /// a sign change, so a tangential touch may have been missed.
    pub tangential: bool,
    /// Fraction of pre-scan points with `||σ| - 1| < SINGULAR_BAND`.
    pub singular_fraction: f64,
}

impl ShootingKernel {
    /// Pre-scan grid of `10 · n_quad` intervals.
    pub fn new(sys: &LtiSystem, n_quad: usize) -> Result<Self> {
        if n_quad == 0 {
            return Err(Error::InvalidArgument("n_quad must be at least 1".into()));
        }
        let m = 10 * n_quad;
        let horizon = sys.horizon();
        let times: Vec<f64> = (0..=m).map(|i| horizon * i as f64 / m as f64).collect();
        let kernel = times
            .iter()
            .map(|&t| sys.kernel_at(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(ShootingKernel {
            a: sys.a().clone(),
            b: sys.b().clone(),
            horizon,
            times,
            kernel,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    fn sigma_at(&self, p0: &[f64], t: f64) -> f64 {
        let w = expm(&self.a, -t)
            .expect("square A")
            .mul_vec(self.b.as_slice());
        dot(&w, p0)
    }

    fn bisect(&self, p0: &[f64], mut lo: f64, mut hi: f64, active_lo: bool) -> f64 {
        while hi - lo > SWITCH_TOL {
            let mid = 0.5 * (lo + hi);
            if (self.sigma_at(p0, mid).abs() > 1.0) == active_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn extremal(&self, seed: &CostateSeed) -> Extremal {
        let p0 = seed.as_slice();
        let sigma: Vec<f64> = self.kernel.iter().map(|w| dot(w, p0)).collect();
        let gap: Vec<f64> = sigma.iter().map(|s| s.abs() - 1.0).collect();
        let active: Vec<bool> = gap.iter().map(|&g| g > 0.0).collect();

        let mut switches = Vec::new();
        for i in 0..active.len() - 1 {
            if active[i] != active[i + 1] {
                switches.push(self.bisect(p0, self.times[i], self.times[i + 1], active[i]));
            }
        }
        // each segment's level from σ at its midpoint
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&switches);
        bounds.push(self.horizon);
        let levels: Vec<i8> = bounds
            .windows(2)
            .map(|w| -dead_zone(self.sigma_at(p0, 0.5 * (w[0] + w[1]))) as i8)
            .collect();

        let tangential = (1..gap.len() - 1).any(|i| {
            let extremum = (gap[i] - gap[i - 1]) * (gap[i + 1] - gap[i]) <= 0.0;
            extremum
                && gap[i].abs() < 1e-6
                && active[i - 1] == active[i]
                && active[i] == active[i + 1]
        });
        let singular =
            gap.iter().filter(|g| g.abs() < SINGULAR_BAND).count() as f64 / gap.len() as f64;

        Extremal {
            structure: SwitchingStructure::from_segments(self.horizon, &switches, &levels),
            tangential,
            singular_fraction: singular,
        }
    }

    /// `ξ + Σ_segments level · ∫ e^{-As}B ds`.
    pub fn residual_of(&self, xi: &[f64], structure: &SwitchingStructure) -> Vec<f64> {
        let mut r = xi.to_vec();
        for (t0, t1, level) in structure.segments() {
            if level == 0 || t1 <= t0 {
                continue;
            }
            let g = cell_integral(&self.a, &self.b, t0, t1).expect("valid segment");
            for (ri, gi) in r.iter_mut().zip(&g) {
                *ri += f64::from(level) * gi;
            }
        }
        r
    }

    pub fn residual(&self, xi: &[f64], seed: &CostateSeed) -> Vec<f64> {
        self.residual_of(xi, &self.extremal(seed).structure)
    }
}

/// Boundary-condition defect `x(T)`-equivalent for the extremal control of
/// `seed`, with `n_quad` setting the pre-scan resolution.
pub fn shoot_residual(
    sys: &LtiSystem,
    xi: &[f64],
    seed: &CostateSeed,
    n_quad: usize,
) -> Result<Vec<f64>> {
    check_seed(sys, seed)?;
    if xi.len() != sys.dim() {
        return Err(Error::Dimension("initial state length".into()));
    }
    Ok(ShootingKernel::new(sys, n_quad)?.residual(xi, seed))
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub n_quad: usize,
    /// Random starts added by [`default_seeds`].
    pub starts: usize,
    pub seed: u64,
    /// Run even when Assumption 1 fails.
    pub force: bool,
    pub tol: f64,
    /// Nelder–Mead function-evaluation budget per start.
    pub max_evals: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            n_quad: 200,
            starts: 20,
            seed: 0,
            force: false,
            tol: SHOOT_TOL,
            max_evals: 600,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootOutcome {
    pub converged: bool,
    pub result: SolveResult,
    pub costate: CostateSeed,
    pub tangential: bool,
    pub singular_fraction: f64,
    /// Index into the seed list of the start that produced `costate`.
    pub start_index: usize,
    pub starts_tried: usize,
}

/// `count` seeds on spheres of log-uniform radius in `[0.5, 100] / ‖B‖`.
pub fn default_seeds(sys: &LtiSystem, count: usize, seed: u64) -> Vec<CostateSeed> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.dim();
    let bn = sys.b_norm().max(f64::MIN_POSITIVE);
    (0..count)
        .map(|_| {
            let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let len = norm(&dir).max(1e-300);
            let radius = (0.5f64.ln() + rng.random::<f64>() * (200f64).ln()).exp() / bn;
            dir.iter_mut().for_each(|d| *d *= radius / len);
            CostateSeed(dir)
        })
        .collect()
}

struct Attempt {
    costate: Vec<f64>,
    residual: f64,
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    step: f64,
    target: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = n + 1;
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= target {
            break;
        }
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if size < 1e-15 * (1.0 + norm(&simplex[0].0)) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (towards, ft) = if fr < worst.1 {
                (reflected.clone(), fr)
            } else {
                (worst.0.clone(), worst.1)
            };
            let contracted = combine(&centroid, &towards, 0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let p = combine(&best, &item.0, 0.5);
                    let v = f(&p);
                    *item = (p, v);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (p, v) = simplex.swap_remove(0);
    (p, v)
}

/// Damped Gauss–Newton with a forward-difference Jacobian.
fn polish(kernel: &ShootingKernel, xi: &[f64], start: Vec<f64>, tol: f64) -> Attempt {
    let n = start.len();
    let eval = |p: &[f64]| kernel.residual(xi, &CostateSeed(p.to_vec()));
    let mut p = start;
    let mut r = eval(&p);
    let mut rn = norm(&r);
    let mut lambda = 1e-8;
    for _ in 0..40 {
        if rn <= tol {
            break;
        }
        let h = 1e-7 * (1.0 + norm(&p));
        let mut jac = Matrix::zeros(n, n);
        for j in 0..n {
            let mut q = p.clone();
            q[j] += h;
            let rq = eval(&q);
            for i in 0..n {
                jac[(i, j)] = (rq[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let jtr = jt.mul_vec(&r);
        let mut improved = false;
        for _ in 0..12 {
            let mut lhs = jtj.clone();
            let diag_scale = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
            for i in 0..n {
                lhs[(i, i)] += lambda * diag_scale;
            }
            let rhs =
                Matrix::column_vector(&jtr.iter().map(|v| -v).collect::<Vec<_>>()).expect("finite");
            let Some(step) = lhs.solve(&rhs).ok().flatten() else {
                lambda *= 10.0;
                continue;
            };
            let q: Vec<f64> = p.iter().zip(step.as_slice()).map(|(a, d)| a + d).collect();
            if q.iter().any(|v| !v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let rq = eval(&q);
            let rqn = norm(&rq);
            if rqn < rn {
                p = q;
                r = rq;
                rn = rqn;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Attempt {
        costate: p,
        residual: rn,
    }
}

fn attempt(
    kernel: &ShootingKernel,
    xi: &[f64],
    start: &CostateSeed,
    opts: &ShootOptions,
    b_norm: f64,
) -> Attempt {
    let f = |p: &[f64]| {
        let r = kernel.residual(xi, &CostateSeed(p.to_vec()));
        dot(&r, &r)
    };
    let p0 = start.as_slice();
    let step = 0.1 * norm(p0).max(1.0 / b_norm);
    let (p, _) = nelder_mead(&f, p0, step, opts.tol * opts.tol * 1e-2, opts.max_evals);
    polish(kernel, xi, p, opts.tol * 1e-2)
}

/// Multi-start shooting. Seeds are tried in order; the first is attempted
/// alone, the rest in parallel, and the lowest-index converged start wins
/// (ties otherwise broken by residual, then index).
pub fn shoot_solve(
    sys: &LtiSystem,
    xi: &[f64],
    initial_seeds: &[CostateSeed],
    opts: &ShootOptions,
) -> Result<ShootOutcome> {
    let gate = sys.assumption1();
    if !gate.normal && !opts.force {
        return Err(Error::NotNormal(gate.failure_reason().unwrap_or_default()));
    }
    if xi.len() != sys.dim() {
        return Err(Error::Dimension(format!(
            "initial state has length {}, system dimension is {}",
            xi.len(),
            sys.dim()
        )));
    }
    for s in initial_seeds {
        check_seed(sys, s)?;
    }
    let kernel = ShootingKernel::new(sys, opts.n_quad)?;
    let b_norm = sys.b_norm().max(f64::MIN_POSITIVE);

    let zero = CostateSeed::zeros(sys.dim());
    let mut seeds: Vec<CostateSeed> = vec![zero];
    seeds.extend(initial_seeds.iter().cloned());

    let mut results: Vec<(usize, Attempt)> = Vec::new();
    // the zero costate only ever solves ξ = 0
    let zero_res = norm(&kernel.residual(xi, &seeds[0]));
    results.push((
        0,
        Attempt {
            costate: seeds[0].0.clone(),
            residual: zero_res,
        },
    ));
    let mut tried = 1;
    if zero_res > opts.tol && seeds.len() > 1 {
        let first = attempt(&kernel, xi, &seeds[1], opts, b_norm);
        tried += 1;
        let done = first.residual <= opts.tol;
        results.push((1, first));
        if !done && seeds.len() > 2 {
            let rest: Vec<(usize, Attempt)> = seeds[2..]
                .par_iter()
                .enumerate()
                .map(|(i, s)| (i + 2, attempt(&kernel, xi, s, opts, b_norm)))
                .collect();
            tried += rest.len();
            results.extend(rest);
        }
    }

    let best = results
        .iter()
        .find(|(_, a)| a.residual <= opts.tol)
        .or_else(|| {
            results
                .iter()
                .min_by(|x, y| x.1.residual.total_cmp(&y.1.residual).then(x.0.cmp(&y.0)))
        })
        .expect("at least one attempt");
    let converged = best.1.residual <= opts.tol;
    let costate = CostateSeed(best.1.costate.clone());
    let ext = kernel.extremal(&costate);
    let control = ext.structure.sample(opts.n_quad)?;
    let residual = norm(&kernel.residual_of(xi, &ext.structure));

    let (value, value_l0) = (ext.structure.l1_norm(), ext.structure.l0_norm());
    let result = SolveResult {
        method: Method::Shoot,
        status: if converged {
            SolveStatus::Solved
        } else {
            SolveStatus::Failed
        },
        control,
        value,
        value_l0,
        fractional_cells: 0,
        residual,
        iterations: tried,
        costate_estimate: Some(costate.0.clone()),
        switching: Some(ext.structure),
    };
    Ok(ShootOutcome {
        converged,
        result,
        costate,
        tangential: ext.tangential,
        singular_fraction: ext.singular_fraction,
        // index into the caller's list; the zero seed is internal
        start_index: best.0.saturating_sub(1),
        starts_tried: tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_scalar() -> LtiSystem {
        LtiSystem::scalar(1.0, 2.0, 5.0).unwrap()
    }

    #[test]
    fn dead_zone_branches() {
        assert_eq!(dead_zone(0.5), 0.0);
        assert_eq!(dead_zone(2.0), 1.0);
        assert_eq!(dead_zone(-3.0), -1.0);
        assert_eq!(dead_zone(1.0), 0.0);
        assert_eq!(dead_zone(-1.0), 0.0);
        for r in [-5.0, -1.5, -0.3, 0.0, 0.99, 1.01, 7.0] {
            assert_eq!(dead_zone(-r), -dead_zone(r));
        }
    }

    #[test]
    fn extremal_control_scalar() {
        let sys = example_scalar();
        let zero = CostateSeed::zeros(1);
        assert_eq!(extremal_control(&sys, &zero, 1.0).unwrap(), 0.0);
        let seed = CostateSeed(vec![-1.0]);
        let ln2 = 2f64.ln();
        assert_eq!(extremal_control(&sys, &seed, 0.0).unwrap(), 1.0);
        assert_eq!(extremal_control(&sys, &seed, ln2 - 1e-6).unwrap(), 1.0);
        assert_eq!(extremal_control(&sys, &seed, ln2 + 1e-6).unwrap(), 0.0);
        let flipped = CostateSeed(vec![1.0]);
        assert_eq!(extremal_control(&sys, &flipped, 0.3).unwrap(), -1.0);
        assert!(extremal_control(&sys, &seed, 6.0).is_err());
    }

    #[test]
    fn extremal_structure_scalar() {
        let k = ShootingKernel::new(&example_scalar(), 100).unwrap();
        let ext = k.extremal(&CostateSeed(vec![1.0]));
        assert_eq!(ext.structure.levels, vec![-1, 0]);
        assert!((ext.structure.times[0] - 2f64.ln()).abs() < 1e-9);
        assert!(!ext.tangential);
        assert_eq!(ext.singular_fraction, 0.0);
    }

    #[test]
    fn residual_at_known_solution() {
        let sys = example_scalar();
        assert_eq!(
            shoot_residual(&sys, &[0.0], &CostateSeed::zeros(1), 10).unwrap(),
            vec![0.0]
        );
        let r = shoot_residual(&sys, &[1.0], &CostateSeed(vec![1.0]), 200).unwrap();
        assert!(r[0].abs() <= 1e-8, "{r:?}");
    }

    #[test]
    fn residual_is_continuous_in_costate() {
        let k = ShootingKernel::new(&example_scalar(), 200).unwrap();
        let r = |p: f64| k.residual(&[1.0], &CostateSeed(vec![p]))[0];
        // away from the tangential point |p| = 1/2
        for p in [0.8, 1.0, 1.7, -2.3] {
            let h = 1e-6;
            let fd = (r(p + h) - r(p - h)) / (2.0 * h);
            let jump = (r(p + h) - r(p)).abs();
            assert!(jump < 10.0 * h * (1.0 + fd.abs()), "p={p}");
            // d/dp of -(2 - 1/p) for p > 1/2
            if p > 0.5 {
                assert_relative_eq!(fd, -1.0 / (p * p), max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn switching_structure_norms_agree_exactly() {
        let s = SwitchingStructure::from_segments(5.0, &[0.3, 1.1, 4.0], &[1, 0, -1, 0]);
        assert_eq!(s.l1_norm(), s.l0_norm());
        assert_relative_eq!(s.l1_norm(), 0.3 + 2.9, max_relative = 1e-15);
        let merged = SwitchingStructure::from_segments(5.0, &[1.0, 2.0], &[1, 1, 0]);
        assert_eq!(merged.times, vec![2.0]);
        assert_eq!(merged.levels, vec![1, 0]);
    }

    #[test]
    fn shoot_scalar_example() {
        let sys = example_scalar();
        let seeds = default_seeds(&sys, 8, 7);
        let out = shoot_solve(&sys, &[1.0], &seeds, &ShootOptions::default()).unwrap();
        assert!(out.converged);
        let s = out.result.switching.as_ref().unwrap();
        assert!((out.result.value - 2f64.ln()).abs() < 1e-6);
        assert_eq!(s.times.len(), 1);
        assert!((s.times[0] - 2f64.ln()).abs() < 1e-6);
        assert_eq!(out.result.value, out.result.value_l0);
    }

    #[test]
    fn shoot_zero_state() {
        let sys = example_scalar();
        let out = shoot_solve(&sys, &[0.0], &[], &ShootOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.costate.0, vec![0.0]);
        assert_eq!(out.result.value, 0.0);
    }

    #[test]
    fn shoot_refuses_singular_a() {
        let sys = LtiSystem::new(
            Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Matrix::column_vector(&[0.0, 1.0]).unwrap(),
            2.0,
        )
        .unwrap();
        let err = shoot_solve(&sys, &[0.1, 0.1], &[], &ShootOptions::default()).unwrap_err();
        assert!(err.to_string().contains("A is singular"));
    }

    #[test]
    fn seeds_are_reproducible() {
        let sys = example_scalar();
        assert_eq!(default_seeds(&sys, 5, 42), default_seeds(&sys, 5, 42));
        assert_ne!(default_seeds(&sys, 5, 42), default_seeds(&sys, 5, 43));
    }
}

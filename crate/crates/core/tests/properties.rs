//! Property tests for the numerical kernel, the control model, the LP
//! value function and the table format.

use approx::assert_relative_eq;
use proptest::prelude::*;

use handsoff::analysis::oracle::Oracle1dParams;
use handsoff::analysis::table::{GridSpec, ValueTable};
use handsoff::linalg::{cell_integral, expm, kalman_rank, Matrix};
use handsoff::model::{terminal_map, ControlSignal, LtiSystem};
use handsoff::numfmt::sig12;
use handsoff::{dead_zone, value_l1};

fn square(n: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-scale..scale, n * n).prop_map(move |v| Matrix::new(n, n, v).unwrap())
}

fn column(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(|v| Matrix::column_vector(&v).unwrap())
}

fn admissible(cells: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![Just(0.0), Just(1.0), Just(-1.0), -1.0..=1.0f64],
        cells,
    )
}

fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn oscillator() -> LtiSystem {
    LtiSystem::new(
        Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap(),
        Matrix::column_vector(&[0.0, 1.0]).unwrap(),
        2.0 * std::f64::consts::PI,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_group_property(a in square(3, 1.5), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let lhs = expm(&a, s + t).unwrap();
        let rhs = expm(&a, s).unwrap().matmul(&expm(&a, t).unwrap()).unwrap();
        let scale = lhs.max_abs().max(1.0);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-11 * scale, "{}", max_diff(&lhs, &rhs));
    }

    #[test]
    fn expm_inverse(a in square(2, 2.0), t in -1.0..1.0f64) {
        let p = expm(&a, t).unwrap().matmul(&expm(&a, -t).unwrap()).unwrap();
        prop_assert!(max_diff(&p, &Matrix::identity(2)) <= 1e-11);
    }

    #[test]
    fn cell_integral_is_additive(
        a in square(3, 1.0),
        b in column(3),
        t0 in -1.0..1.0f64,
        d1 in 0.01..1.0f64,
        d2 in 0.01..1.0f64,
    ) {
        let whole = cell_integral(&a, &b, t0, t0 + d1 + d2).unwrap();
        let left = cell_integral(&a, &b, t0, t0 + d1).unwrap();
        let right = cell_integral(&a, &b, t0 + d1, t0 + d1 + d2).unwrap();
        for i in 0..3 {
            prop_assert!((whole[i] - left[i] - right[i]).abs() <= 1e-11 * (1.0 + whole[i].abs()));
        }
    }

    #[test]
    fn rank_invariant_under_change_of_basis(
        a in square(3, 1.0),
        b in column(3),
        t in square(3, 0.3),
        drop in 0usize..4,
    ) {
        // optionally make (A, B) uncontrollable by zeroing a block
        let mut a = a;
        let mut b = b;
        if drop < 3 {
            for j in 0..3 {
                if j != drop {
                    a[(drop, j)] = 0.0;
                }
            }
            b[(drop, 0)] = 0.0;
        }
        let t = &Matrix::identity(3) + &t;
        let tinv = t.inverse().unwrap().unwrap();
        let a2 = t.matmul(&a).unwrap().matmul(&tinv).unwrap();
        let b2 = t.matmul(&b).unwrap();
        prop_assert_eq!(kalman_rank(&a, &b).unwrap(), kalman_rank(&a2, &b2).unwrap());
    }

    #[test]
    fn l1_at_most_l0_at_most_horizon(values in admissible(60), horizon in 0.1..10.0f64) {
        let u = ControlSignal::new(horizon, values).unwrap();
        let l1 = u.l1_norm();
        let l0 = u.l0_norm(0.0);
        prop_assert!(l1 <= l0);
        prop_assert!(l0 <= horizon * (1.0 + 1e-15));
    }

    #[test]
    fn l0_monotone_in_tolerance(values in admissible(40), t1 in 0.0..0.5f64, t2 in 0.0..0.5f64) {
        let u = ControlSignal::new(3.0, values).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(u.l0_norm(lo) >= u.l0_norm(hi));
    }

    #[test]
    fn terminal_map_is_linear(u in admissible(50), v in admissible(50), w in 0.0..=1.0f64) {
        let sys = oscillator();
        let h = sys.horizon();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        let xu = terminal_map(&sys, &ControlSignal::new(h, u).unwrap()).unwrap();
        let xv = terminal_map(&sys, &ControlSignal::new(h, v).unwrap()).unwrap();
        let xm = terminal_map(&sys, &ControlSignal::new(h, mix).unwrap()).unwrap();
        for i in 0..2 {
            prop_assert!((xm[i] - (w * xu[i] + (1.0 - w) * xv[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn dead_zone_is_a_saturated_sign(r in -5.0..5.0f64) {
        let d = dead_zone(r);
        prop_assert!(d == 0.0 || d == 1.0 || d == -1.0);
        prop_assert_eq!(d, -dead_zone(-r));
        if r.abs() < 1.0 { prop_assert_eq!(d, 0.0); }
        if r.abs() > 1.0 { prop_assert_eq!(d, r.signum()); }
    }

    #[test]
    fn twelve_digit_round_trip(x in prop::num::f64::NORMAL) {
        let back: f64 = sig12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs());
    }

    #[test]
    fn oracle_value_is_monotone_and_bounded(a in 0.1..3.0f64, b in -3.0..3.0f64, t in 0.1..8.0f64,
                                            s1 in 0.0..=1.0f64, s2 in 0.0..=1.0f64) {
        prop_assume!(b.abs() > 0.05);
        let p = Oracle1dParams::new(a, b, t).unwrap();
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let (v_lo, v_hi) = (p.value(lo * p.x1()).unwrap(), p.value(hi * p.x1()).unwrap());
        prop_assert!(v_lo <= v_hi);
        prop_assert!((0.0..=t).contains(&v_hi));
        prop_assert_eq!(p.value(-hi * p.x1()).unwrap(), v_hi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn value_is_even(s in -1.0..1.0f64, r in -1.0..1.0f64) {
        let sys = oscillator();
        let xi = vec![2.0 * s, 2.0 * r];
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        match (value_l1(&sys, &xi, 120).unwrap(), value_l1(&sys, &neg, 120).unwrap()) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}"),
            (None, None) => {}
            other => prop_assert!(false, "feasibility differs: {other:?}"),
        }
    }

    #[test]
    fn value_is_convex_along_rays(s in -1.0..1.0f64, r in -1.0..1.0f64, k in 0.0..=1.0f64) {
        let sys = oscillator();
        let xi = vec![2.0 * s, 2.0 * r];
        let inner: Vec<f64> = xi.iter().map(|v| k * v).collect();
        if let Some(v) = value_l1(&sys, &xi, 120).unwrap() {
            let w = value_l1(&sys, &inner, 120).unwrap().expect("star-shaped feasible set");
            prop_assert!(w <= k * v + 1e-9, "V(kξ) = {w}, k V(ξ) = {}", k * v);
            prop_assert!(w <= v + 1e-9);
        }
    }

    #[test]
    fn scalar_lp_tracks_oracle(s in -0.99..0.99f64) {
        let p = Oracle1dParams::new(1.0, 2.0, 5.0).unwrap();
        let xi = s * p.x1();
        let sys = LtiSystem::scalar(1.0, 2.0, 5.0).unwrap();
        let cells = 400;
        let v = value_l1(&sys, &[xi], cells).unwrap().unwrap();
        prop_assert!((v - p.value(xi).unwrap()).abs() <= 2.0 * 5.0 / cells as f64);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(prop::option::of(0.0..10.0f64), 12)) {
        let spec = GridSpec::parse("-1.5:2:4,0:1:3").unwrap();
        let t = ValueTable::from_values(spec, values, 5).unwrap();
        let text = t.to_csv_string().unwrap();
        let back = ValueTable::read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(back.spec.dim(), 2);
        prop_assert_eq!(back.to_csv_string().unwrap(), text);
        for (a, b) in back.values.iter().zip(&t.values) {
            match (a, b) {
                (Some(a), Some(b)) => assert_relative_eq!(*a, *b, max_relative = 1e-11),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }
    }
}

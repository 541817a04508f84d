use divopt::valuefn::{solve, solve_with_barrier};
use divopt::{Case, Error, Solution};
use proptest::prelude::*;

mod common;
use common::{close, instances, row, solver};

fn v_at(sol: &Solution, x: f64) -> f64 {
    if x > 0.0 {
        sol.value(x).unwrap()
    } else {
        0.0
    }
}

#[test]
fn barriers_and_switch_levels() {
    let anchors: [(usize, f64, Case, f64, f64); 7] = [
        (1, -0.2, Case::A1, 0.0, 0.1082),
        (1, -2.4, Case::A2, 0.0, 0.0),
        (2, 1.0, Case::B1, 0.0512, 0.0862),
        (2, -0.4, Case::B2, 0.0516, 0.0357),
        (2, -1.4, Case::B3, 0.0553, 0.0),
        (3, 2.2, Case::C1, 0.1411, 0.1542),
        (3, 0.8, Case::C2, 0.1472, 0.0833),
    ];
    for (r, n, case, x, b) in anchors {
        let sol = solve(&row(r), 2f64.powf(n)).unwrap();
        assert_eq!(sol.form, case);
        assert!(sol.optimal);
        assert!(
            close(sol.x_switch, x, 1.5e-3),
            "row {} N={} x={}",
            r,
            n,
            sol.x_switch
        );
        assert!(close(sol.b, b, 1.5e-3), "row {} N={} b={}", r, n, sol.b);
    }
}

#[test]
fn limit_solutions() {
    let expect = [
        (1, 0.3121, 0.4, 0.2 / 0.5),
        (2, 0.2131, 0.3333, 0.5 / 1.5),
        (3, 0.3071, 0.4667, 0.7 / 1.5),
    ];
    for (r, b, v, exact) in expect {
        let lim = solver(r).asymptotic().unwrap();
        assert!(lim.is_limit());
        assert!(close(lim.b, b, 1.5e-3));
        let vb = lim.value(lim.b).unwrap();
        assert!(close(vb, v, 1.5e-3));
        assert!(
            close(vb, exact, 1e-8),
            "row {} v(b)={} exact={}",
            r,
            vb,
            exact
        );
    }
    let l2 = solver(2).asymptotic().unwrap();
    assert!(close(l2.x_switch, 0.0512, 1.5e-3));
    assert!(close(l2.value(l2.x_switch).unwrap(), 0.1299, 1.5e-3));
    let l3 = solver(3).asymptotic().unwrap();
    assert!(close(l3.x_switch, 0.1411, 1.5e-3));
    assert!(close(l3.value(l3.x_switch).unwrap(), 0.2888, 1.5e-3));
}

#[test]
fn large_gamma_approaches_the_limit() {
    for r in 1..=3 {
        let s = solver(r);
        let lim = s.asymptotic().unwrap();
        let sol = s.solve(2f64.powf(50.0)).unwrap();
        assert!(close(sol.b, lim.b, 1e-6));
        for x in [0.05, 0.2, 0.5] {
            assert!(close(sol.value(x).unwrap(), lim.value(x).unwrap(), 1e-6));
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    for (r, n, sol) in instances() {
        let bps = sol.breakpoints();
        for k in 1..60 {
            let x = 0.01 * k as f64;
            if bps.iter().any(|b| (x - b).abs() < 1e-3) {
                continue;
            }
            let h = 1e-5 * x.max(0.01);
            let (v, v1, v2) = sol.eval(x).unwrap();
            let (vp, v1p, _) = sol.eval(x + h).unwrap();
            let (vm, v1m, _) = sol.eval(x - h).unwrap();
            let d1 = (vp - vm) / (2.0 * h);
            let d2 = (v1p - v1m) / (2.0 * h);
            assert!(v.is_finite());
            assert!(
                (d1 - v1).abs() <= 1e-5 * v1.abs().max(1e-3),
                "row {} N={} x={}: {} vs {}",
                r,
                n,
                x,
                d1,
                v1
            );
            assert!(
                (d2 - v2).abs() <= 1e-4 * v2.abs().max(1e-2),
                "row {} N={} x={}: {} vs {}",
                r,
                n,
                x,
                d2,
                v2
            );
        }
    }
}

#[test]
fn value_vanishes_at_the_origin() {
    for (r, n, sol) in instances() {
        let (v0, _, _) = sol.at_origin().unwrap();
        assert!(v0.abs() < 1e-12, "row {} N={} v(0+)={}", r, n, v0);
        assert!(sol.value(1e-12).unwrap() < sol.value(1e-6).unwrap());
    }
}

#[test]
fn pieces_join_smoothly() {
    for (r, n, sol) in instances() {
        for (k, w) in sol.segments.windows(2).enumerate() {
            let x = w[0].hi;
            let a = w[0].eval(x).unwrap();
            let b = w[1].eval(x).unwrap();
            let rel = |p: f64, q: f64| (p - q).abs() / p.abs().max(1.0);
            assert!(rel(a.0, b.0) < 1e-9, "row {} N={} bp {}", r, n, k);
            assert!(rel(a.1, b.1) < 1e-8, "row {} N={} bp {}", r, n, k);
            assert!(rel(a.2, b.2) < 1e-6, "row {} N={} bp {}", r, n, k);
        }
    }
}

#[test]
fn transforms_round_trip() {
    for (r, n, sol) in instances() {
        for seg in &sol.segments {
            let Some(t) = seg.transform() else { continue };
            let (lo, hi) = t.domain();
            for k in 0..=40 {
                let z = lo + (hi - lo) * k as f64 / 40.0;
                let x = t.forward(z).unwrap();
                let back = t.inverse(x).unwrap();
                assert!(
                    (back - z).abs() <= 1e-10 * z.abs().max(1.0),
                    "row {} N={} z={} back={}",
                    r,
                    n,
                    z,
                    back
                );
                assert!(t.derivative(z).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn optimal_barrier_dominates_other_barriers() {
    let figures: [(usize, &[f64]); 3] = [
        (1, &[-0.2, -2.4]),
        (2, &[1.0, -0.4, -1.4]),
        (3, &[2.2, 0.8]),
    ];
    for (r, ns) in figures {
        let s = solver(r);
        for &n in ns {
            let g = 2f64.powf(n);
            let best = s.solve(g).unwrap();
            let mut tested = 0;
            for k in 0..=25 {
                let b = 0.02 * k as f64;
                let other = match s.with_barrier(g, b) {
                    Ok(o) => o,
                    Err(Error::Domain(_)) => continue,
                    Err(e) => panic!("row {} N={} b={}: {}", r, n, b, e),
                };
                tested += 1;
                for x in [0.05, 0.1, 0.2, 0.4] {
                    assert!(
                        v_at(&best, x) >= v_at(&other, x) - 1e-9,
                        "row {} N={} b={} x={}",
                        r,
                        n,
                        b,
                        x
                    );
                }
            }
            assert!(tested > 0);
        }
    }
}

#[test]
fn barrier_override_at_the_optimum_reproduces_the_solution() {
    for (r, n) in [(1, 0.0), (2, 1.0), (3, 2.2), (3, 0.8), (2, -0.4)] {
        let g = 2f64.powf(n);
        let best = solve(&row(r), g).unwrap();
        let same = solve_with_barrier(&row(r), g, best.b).unwrap();
        for x in [0.03, 0.1, 0.3] {
            assert!(close(best.value(x).unwrap(), same.value(x).unwrap(), 1e-10));
        }
    }
}

#[test]
fn evaluation_outside_the_domain_fails() {
    let sol = solve(&row(1), 2.0).unwrap();
    assert!(matches!(sol.eval(0.0), Err(Error::Domain(_))));
    assert!(matches!(sol.eval(-1.0), Err(Error::Domain(_))));
    assert!(solve_with_barrier(&row(1), 2.0, -0.1).is_err());
}

#[test]
fn single_precision_tracks_double() {
    use divopt::model::ModelParams;
    use divopt::valuefn::Solver as GenericSolver;
    for (i, r) in common::ROWS.iter().enumerate() {
        let p32 = ModelParams::<f32>::new(r.0 as f32, r.1 as f32, r.2 as f32, r.3 as f32).unwrap();
        let s32 = GenericSolver::new(p32).unwrap();
        let s64 = solver(i + 1);
        for n in [-1.4f64, 0.8, 2.2] {
            let a = s32.solve(2f32.powf(n as f32)).unwrap();
            let b = s64.solve(2f64.powf(n)).unwrap();
            assert_eq!(a.form, b.form);
            assert!((a.b as f64 - b.b).abs() < 1e-4);
            assert!((a.value(0.2).unwrap() as f64 - b.value(0.2).unwrap()).abs() < 1e-4);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_increasing_and_concave(r in 1usize..=3, n in -4.0f64..8.0, x in 1e-3f64..1.5, dx in 1e-4f64..0.5) {
        let sol = solve(&row(r), 2f64.powf(n)).unwrap();
        let (va, d1a, d2a) = sol.eval(x).unwrap();
        let (vb, d1b, _) = sol.eval(x + dx).unwrap();
        prop_assert!(vb > va);
        prop_assert!(d1a > 0.0 && d2a <= 0.0);
        prop_assert!(d1b <= d1a * (1.0 + 1e-12));
    }

    #[test]
    fn optimal_barrier_grows_with_gamma(r in 1usize..=3, n in -4.0f64..10.0, dn in 0.01f64..2.0) {
        let s = solver(r);
        let (a, b) = (s.solve(2f64.powf(n)).unwrap(), s.solve(2f64.powf(n + dn)).unwrap());
        if a.form == b.form {
            prop_assert!(b.b >= a.b - 1e-12);
        }
    }
}

use divopt::policy::{dividend, retention};
use divopt::valuefn::solve;
use divopt::Strategy;
use proptest::prelude::*;

mod common;
use common::{instances, row};

#[test]
fn retention_is_a_fraction_and_nondecreasing() {
    for (r, n, sol) in instances() {
        let x_switch = sol.x_switch;
        let s = Strategy::optimal(sol);
        let mut prev = 0.0;
        for k in 1..400 {
            let x = 0.0025 * k as f64;
            let u = retention(&s, x).unwrap();
            assert!(
                (0.0..=1.0).contains(&u),
                "row {} N={} x={} u={}",
                r,
                n,
                x,
                u
            );
            assert!(u >= prev - 1e-9, "row {} N={} x={}", r, n, x);
            if x >= x_switch {
                assert_eq!(u, 1.0);
            }
            prev = u;
        }
    }
}

#[test]
fn full_retention_when_reinsurance_is_expensive() {
    let s = Strategy::optimal(solve(&row(1), 2.0).unwrap());
    for x in [1e-4, 0.01, 0.1, 1.0] {
        assert_eq!(s.retention(x).unwrap(), 1.0);
    }
}

#[test]
fn reinsurance_below_the_switch_level() {
    let sol = solve(&row(2), 2.0).unwrap();
    let xs = sol.x_switch;
    let s = Strategy::optimal(sol);
    assert!(s.retention(0.5 * xs).unwrap() < 1.0);
    assert!((s.retention(xs * (1.0 - 1e-9)).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn dividend_pays_the_excess_over_the_barrier() {
    let sol = solve(&row(3), 2f64.powf(2.2)).unwrap();
    let b = sol.b;
    let s = Strategy::optimal(sol);
    assert_eq!(dividend(&s, 0.5 * b), 0.0);
    assert!((dividend(&s, b + 0.3) - 0.3).abs() < 1e-12);
    assert_eq!(s.barrier(), b);
}

proptest! {
    #[test]
    fn dividend_bounds(u in 0.0f64..=1.0, b in 0.0f64..2.0, x in 0.0f64..5.0) {
        let s = Strategy::constant(u, b).unwrap();
        let d = s.dividend(x);
        prop_assert!(d >= 0.0 && d <= x);
        prop_assert!(x - d <= b.max(x.min(b)) + 1e-15);
    }
}

#![allow(dead_code)]

use divopt::{Params, Solution, Solver};

/// The three parameter rows used throughout: `(delta, sigma, mu, eta)`.
pub const ROWS: [(f64, f64, f64, f64); 3] = [
    (0.5, 0.3, 1.2, 0.2),
    (1.5, 0.3, 0.8, 0.5),
    (1.5, 0.5, 0.7, 0.7),
];

/// Exponents `N` with `gamma = 2^N` covering every case of every row.
pub const EXPONENTS: [f64; 7] = [-3.0, -1.4, -0.4, 0.0, 1.0, 3.0, 5.0];

pub fn row(i: usize) -> Params {
    let r = ROWS[i - 1];
    Params::new(r.0, r.1, r.2, r.3).unwrap()
}

pub fn solver(i: usize) -> Solver {
    Solver::new(row(i)).unwrap()
}

/// Optimal solutions for every row and exponent.
pub fn instances() -> Vec<(usize, f64, Solution)> {
    let mut out = Vec::new();
    for i in 1..=3 {
        let s = solver(i);
        for n in EXPONENTS {
            out.push((i, n, s.solve(2f64.powf(n)).unwrap()));
        }
    }
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

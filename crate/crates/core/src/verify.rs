//! Independent checks that a constructed value function solves the HJB
//! equation and has the shape the verification argument relies on.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{find_root, Bracket};
use crate::scalar::{lit, root_tol, Real};
use crate::valuefn::{Solution, Solver};

/// Default bound on the relative HJB residual.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Log-spaced points in the default grid.
pub const GRID_POINTS: usize = 2000;
/// Extra points placed around each breakpoint.
pub const CLUSTER_POINTS: usize = 50;

const CLUSTER_HALF_WIDTH: f64 = 1e-3;
const EXCLUSION: f64 = 1e-7;
const GRID_START: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShapeFlags {
    pub increasing: bool,
    pub concave: bool,
    pub ratio_decreasing: bool,
    pub smooth_fit: bool,
    pub barrier_slope: bool,
    pub retention: bool,
}

impl ShapeFlags {
    fn unchecked() -> Self {
        Self {
            increasing: true,
            concave: true,
            ratio_decreasing: true,
            smooth_fit: true,
            barrier_slope: true,
            retention: true,
        }
    }

    pub fn all(&self) -> bool {
        self.increasing
            && self.concave
            && self.ratio_decreasing
            && self.smooth_fit
            && self.barrier_slope
            && self.retention
    }

    fn and(self, o: Self) -> Self {
        Self {
            increasing: self.increasing && o.increasing,
            concave: self.concave && o.concave,
            ratio_decreasing: self.ratio_decreasing && o.ratio_decreasing,
            smooth_fit: self.smooth_fit && o.smooth_fit,
            barrier_slope: self.barrier_slope && o.barrier_slope,
            retention: self.retention && o.retention,
        }
    }
}

/// Relative jumps of `(v, v', v'')` across one breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakpointJump<T> {
    pub x: T,
    pub dv: T,
    pub dv1: T,
    pub dv2: T,
}

impl<T: Real> BreakpointJump<T> {
    pub fn max(&self) -> T {
        self.dv.abs().max(self.dv1.abs()).max(self.dv2.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport<T> {
    /// Largest `|R(x)| / (1 + |v(x)|)` over the grid (zero if not computed).
    pub max_hjb_residual: T,
    pub worst_x: T,
    pub shape_flags: ShapeFlags,
    pub breakpoint_jumps: Vec<BreakpointJump<T>>,
    /// Grid points where `v'' >= 0` forced the full-retention generator.
    pub degenerate_points: usize,
    pub grid_points: usize,
}

impl<T: Real> VerificationReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.max_hjb_residual <= tol && self.shape_flags.all()
    }

    /// Combines a residual report with a shape report.
    pub fn merge(self, other: Self) -> Self {
        let (max_hjb_residual, worst_x) = if other.max_hjb_residual > self.max_hjb_residual {
            (other.max_hjb_residual, other.worst_x)
        } else {
            (self.max_hjb_residual, self.worst_x)
        };
        let mut breakpoint_jumps = self.breakpoint_jumps;
        if breakpoint_jumps.is_empty() {
            breakpoint_jumps = other.breakpoint_jumps;
        }
        Self {
            max_hjb_residual,
            worst_x,
            shape_flags: self.shape_flags.and(other.shape_flags),
            breakpoint_jumps,
            degenerate_points: self.degenerate_points + other.degenerate_points,
            grid_points: self.grid_points.max(other.grid_points),
        }
    }
}

/// Log-spaced grid on `(1e-4, top + 5/|lambda|)` with points clustered
/// around every breakpoint, keeping `1e-7` away from each breakpoint.
pub fn verification_grid<T: Real>(sol: &Solution<T>) -> Vec<T> {
    let start = lit::<T>(GRID_START);
    let reach = sol
        .tail_lambda()
        .map_or(T::one(), |l| lit::<T>(5.0) / l.abs());
    let upper = (sol.top_breakpoint() + reach).max(start * lit(10.0));
    let (l0, l1) = (start.ln(), upper.ln());
    let n = GRID_POINTS;
    let mut grid: Vec<T> = (0..n)
        .map(|i| (l0 + (l1 - l0) * lit(i as f64 / (n - 1) as f64)).exp())
        .collect();
    let bps = sol.breakpoints();
    let w = lit::<T>(CLUSTER_HALF_WIDTH);
    for bp in &bps {
        for i in 0..CLUSTER_POINTS {
            let x = *bp - w + w * lit(2.0 * i as f64 / (CLUSTER_POINTS - 1) as f64);
            if x > T::zero() {
                grid.push(x);
            }
        }
    }
    let ex = lit::<T>(EXCLUSION);
    grid.retain(|x| bps.iter().all(|bp| (*x - *bp).abs() >= ex));
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    grid
}

/// `inf { x > 0 : v'(x) < 1 }`, read off the function itself.
pub fn slope_one_level<T: Real>(sol: &Solution<T>) -> Result<T> {
    let floor = lit::<T>(1e-12) * sol.top_breakpoint().max(lit(1e-3));
    let d = |x: T| sol.eval(x).map(|v| v.1 - T::one());
    if d(floor)? <= T::zero() {
        return Ok(T::zero());
    }
    let mut hi = sol.top_breakpoint().max(lit(1e-3));
    while d(hi)? >= T::zero() {
        hi = hi * lit(2.0);
        if hi > lit(1e6) {
            return Err(Error::numerical(1e6, "v' does not fall below one"));
        }
    }
    let mut err = None;
    let r = find_root(
        |x| match d(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                T::nan()
            }
        },
        Bracket::new(floor, hi)?,
        root_tol(),
    );
    match err {
        Some(e) => Err(e),
        None => r,
    }
}

/// Reduced HJB operator at one point: `(R(x), v(x), degenerate)`.
fn residual_at<T: Real>(
    sol: &Solution<T>,
    p: &ModelParams<T>,
    gamma: T,
    pay_level: T,
    v_pay: T,
    x: T,
) -> Result<(T, T, bool)> {
    let (v, v1, v2) = sol.eval(x)?;
    let s2 = p.sigma * p.sigma;
    let half = lit::<T>(0.5);
    let degenerate = !(v2 < T::zero());
    let interior = !degenerate && -p.mu * v1 / (s2 * v2) < T::one();
    let gen = if interior {
        -p.mu * p.mu * v1 * v1 / (lit::<T>(2.0) * s2 * v2) + (p.eta - p.mu) * v1 - p.delta * v
    } else {
        half * s2 * v2 + p.eta * v1 - p.delta * v
    };
    // The supremum over payouts in [0, x] is attained by paying down to the
    // level where v' first drops below one, or by paying nothing below it.
    let gain = if x > pay_level {
        (x - pay_level + v_pay - v).max(T::zero())
    } else {
        T::zero()
    };
    // Without a finite intensity the equation becomes the variational
    // inequality max(L v - delta v, 1 - v') = 0.
    let r = if gamma.is_finite() {
        gen + gamma * gain
    } else {
        gen.max(T::one() - v1)
    };
    Ok((r, v, degenerate))
}

/// Maximum relative HJB residual of `sol` on `grid`.
pub fn hjb_residual<T: Real>(
    sol: &Solution<T>,
    params: &ModelParams<T>,
    gamma: T,
    grid: &[T],
) -> Result<VerificationReport<T>> {
    // The limit equation has no payout term.
    let pay_level = if gamma.is_finite() {
        slope_one_level(sol)?
    } else {
        T::infinity()
    };
    let v_pay = if pay_level > T::zero() && pay_level.is_finite() {
        sol.value(pay_level)?
    } else {
        T::zero()
    };
    let mut worst = (T::zero(), T::zero());
    let mut degenerate_points = 0;
    for &x in grid {
        let (r, v, deg) = residual_at(sol, params, gamma, pay_level, v_pay, x)?;
        if deg {
            degenerate_points += 1;
        }
        let rel = r.abs() / (T::one() + v.abs());
        if !(rel <= worst.0) {
            worst = (rel, x);
        }
    }
    Ok(VerificationReport {
        max_hjb_residual: worst.0,
        worst_x: worst.1,
        shape_flags: ShapeFlags::unchecked(),
        breakpoint_jumps: Vec::new(),
        degenerate_points,
        grid_points: grid.len(),
    })
}

/// Relative jumps of `(v, v', v'')` at each interior breakpoint, both sides
/// evaluated from their own segment formula.
pub fn breakpoint_jumps<T: Real>(sol: &Solution<T>) -> Result<Vec<BreakpointJump<T>>> {
    let rel = |a: T, b: T| (a - b) / a.abs().max(b.abs()).max(T::one());
    sol.segments
        .windows(2)
        .map(|w| {
            let x = w[0].hi;
            let l = w[0].eval(x)?;
            let r = w[1].eval(x)?;
            Ok(BreakpointJump {
                x,
                dv: rel(l.0, r.0),
                dv1: rel(l.1, r.1),
                dv2: rel(l.2, r.2),
            })
        })
        .collect()
}

/// Shape hypotheses of the verification argument on the default grid.
pub fn check_shape<T: Real>(sol: &Solution<T>) -> Result<VerificationReport<T>> {
    let p = &sol.params;
    let s2 = p.sigma * p.sigma;
    let grid = verification_grid(sol);
    let vals: Vec<(T, T, T, T)> = grid
        .iter()
        .map(|&x| sol.eval(x).map(|(v, v1, v2)| (x, v, v1, v2)))
        .collect::<Result<_>>()?;
    let tiny = lit::<T>(1e-9);
    let curv = lit::<T>(-1e-12);

    let increasing = vals.iter().all(|r| r.2 > T::zero());
    let concave = vals.iter().all(|r| r.3 <= T::zero());

    let ratios: Vec<T> = vals
        .iter()
        .filter(|r| r.3 < curv)
        .map(|r| r.2 / r.3)
        .collect();
    let ratio_decreasing = ratios
        .windows(2)
        .all(|w| w[1] <= w[0] + tiny * (T::one() + w[0].abs()));

    let jumps = breakpoint_jumps(sol)?;
    let smooth_fit = jumps.iter().all(|j| j.max() <= lit(1e-6));

    let barrier_slope = if sol.b > T::zero() {
        (sol.eval(sol.b)?.1 - T::one()).abs() <= lit(1e-8)
    } else {
        sol.at_origin()?.1 <= T::one() + lit(1e-10)
    };

    // u* from the first-order condition, set to +inf where v'' >= 0.
    let u_of = |v1: T, v2: T| {
        if v2 < T::zero() {
            -p.mu * v1 / (s2 * v2)
        } else {
            T::infinity()
        }
    };
    let below: Vec<T> = vals
        .iter()
        .filter(|r| r.0 < sol.x_switch)
        .map(|r| u_of(r.2, r.3))
        .collect();
    let mut retention = below
        .iter()
        .all(|u| *u >= T::zero() && *u <= T::one() + tiny)
        && below.windows(2).all(|w| w[1] >= w[0] - tiny)
        && vals
            .iter()
            .filter(|r| r.0 > sol.x_switch)
            .all(|r| u_of(r.2, r.3) >= T::one() - tiny);
    if sol.x_switch > T::zero() {
        let (_, v1, v2) = sol.eval(sol.x_switch)?;
        retention = retention && (u_of(v1, v2) - T::one()).abs() <= lit(1e-6);
    }

    Ok(VerificationReport {
        max_hjb_residual: T::zero(),
        worst_x: T::zero(),
        shape_flags: ShapeFlags {
            increasing,
            concave,
            ratio_decreasing,
            smooth_fit,
            barrier_slope,
            retention,
        },
        breakpoint_jumps: jumps,
        degenerate_points: 0,
        grid_points: grid.len(),
    })
}

/// Residual on the default grid merged with the shape checks.
pub fn verify_solution<T: Real>(sol: &Solution<T>) -> Result<VerificationReport<T>> {
    let grid = verification_grid(sol);
    let res = hjb_residual(sol, &sol.params, sol.gamma, &grid)?;
    Ok(res.merge(check_shape(sol)?))
}

/// One row of the convergence table towards the singular-control limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow<T> {
    pub gamma: T,
    /// `max_x |v_gamma(x) - v_inf(x)|` over `(0, b_inf + 1]`.
    pub distance: T,
    pub b: T,
    pub v_at_b: T,
    pub x_switch: T,
    pub v_at_x_switch: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTable<T> {
    pub b_inf: T,
    pub v_inf_at_b: T,
    pub x_inf: T,
    pub v_inf_at_x: T,
    pub rows: Vec<LimitRow<T>>,
}

impl<T: Real> LimitTable<T> {
    pub fn distances_nonincreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].distance <= w[0].distance * (T::one() + lit(1e-9)))
    }

    pub fn last(&self) -> Option<&LimitRow<T>> {
        self.rows.last()
    }
}

const LIMIT_GRID: usize = 400;

/// Distances of the optimal solutions at `gammas` from the limit solution.
pub fn check_limits<T: Real>(params: &ModelParams<T>, gammas: &[T]) -> Result<LimitTable<T>> {
    let solver = Solver::new(*params)?;
    let lim = solver.asymptotic()?;
    let top = lim.form;
    let upper = lim.b + T::one();
    let xs: Vec<T> = (1..=LIMIT_GRID)
        .map(|i| upper * lit(i as f64 / LIMIT_GRID as f64))
        .collect();
    let lim_vals: Vec<T> = xs.iter().map(|&x| lim.value(x)).collect::<Result<_>>()?;
    let at = |s: &Solution<T>, x: T| {
        if x > T::zero() {
            s.value(x)
        } else {
            Ok(T::zero())
        }
    };
    let mut rows = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let sol = solver.solve(g)?;
        if sol.regime.case != top {
            return Err(Error::Regime(format!(
                "gamma {} is in case {}, limit table needs {}",
                g, sol.regime.case, top
            )));
        }
        let mut distance = T::zero();
        for (x, vl) in xs.iter().zip(&lim_vals) {
            distance = distance.max((sol.value(*x)? - *vl).abs());
        }
        rows.push(LimitRow {
            gamma: g,
            distance,
            b: sol.b,
            v_at_b: at(&sol, sol.b)?,
            x_switch: sol.x_switch,
            v_at_x_switch: at(&sol, sol.x_switch)?,
        });
    }
    Ok(LimitTable {
        b_inf: lim.b,
        v_inf_at_b: lim.value(lim.b)?,
        x_inf: lim.x_switch,
        v_inf_at_x: at(&lim, lim.x_switch)?,
        rows,
    })
}

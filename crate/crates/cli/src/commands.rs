//! One function per subcommand; each returns a renderable output.

use divopt::model::thresholds;
use divopt::verify::{verify_solution, RESIDUAL_TOL};
use divopt::{estimate_npv, Error, SimConfig, SimResult, Solution, Solver, Strategy};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Output, Table};

fn opt_cell(x: Option<f64>) -> Cell {
    x.map_or(Cell::Text(String::new()), Cell::Num)
}

/// `v` at a level, with `v(0) = 0`.
fn value_at(sol: &Solution, x: f64) -> CliResult<f64> {
    Ok(if x > 0.0 { sol.value(x)? } else { 0.0 })
}

/// Optimal solution, the limit solution for infinite gamma, or the solution
/// for a fixed barrier.
pub fn build(cfg: &RunConfig, barrier: Option<f64>) -> CliResult<Solution> {
    let solver = Solver::new(cfg.params)?;
    Ok(match (barrier, cfg.gamma.is_finite()) {
        (Some(_), false) => {
            return Err(CliError::Usage(
                "a barrier override needs a finite gamma".into(),
            ))
        }
        (Some(b), true) => solver.with_barrier(cfg.gamma, b)?,
        (None, true) => solver.solve(cfg.gamma)?,
        (None, false) => solver.asymptotic()?,
    })
}

#[derive(Debug, Serialize)]
struct Classification {
    regime: String,
    branch: String,
    gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_bar1: Option<f64>,
}

pub fn classify(cfg: &RunConfig) -> CliResult<Output> {
    let t = thresholds(&cfg.params)?;
    let c = Classification {
        regime: t.case_for(cfg.gamma).to_string(),
        branch: format!("{:?}", t.branch),
        gamma: cfg.gamma,
        gamma0: t.gamma0,
        gamma1: t.gamma1,
        gamma2: t.gamma2,
        gamma_bar1: t.gamma_bar1,
    };
    let mut table = Table::new(vec![
        "regime",
        "branch",
        "gamma",
        "gamma0",
        "gamma1",
        "gamma2",
        "gamma_bar1",
    ]);
    table.push(vec![
        c.regime.as_str().into(),
        c.branch.as_str().into(),
        c.gamma.into(),
        opt_cell(c.gamma0),
        opt_cell(c.gamma1),
        opt_cell(c.gamma2),
        opt_cell(c.gamma_bar1),
    ]);
    Output::from_record(&c, table)
}

#[derive(Debug, Serialize)]
struct Solved {
    regime: String,
    form: String,
    gamma: f64,
    optimal: bool,
    b: f64,
    x_switch: f64,
    v_at_b: f64,
    v_at_x_switch: f64,
    breakpoints: Vec<f64>,
    constants: serde_json::Map<String, serde_json::Value>,
}

pub fn solve(cfg: &RunConfig, barrier: Option<f64>) -> CliResult<Output> {
    let sol = build(cfg, barrier)?;
    let s = Solved {
        regime: sol.regime.case.to_string(),
        form: sol.form.to_string(),
        gamma: cfg.gamma,
        optimal: sol.optimal,
        b: sol.b,
        x_switch: sol.x_switch,
        v_at_b: value_at(&sol, sol.b)?,
        v_at_x_switch: value_at(&sol, sol.x_switch)?,
        breakpoints: sol.breakpoints(),
        constants: sol
            .constants
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v)))
            .collect(),
    };
    let mut table = Table::new(vec![
        "regime",
        "form",
        "gamma",
        "b",
        "x_switch",
        "v_at_b",
        "v_at_x_switch",
    ]);
    table.push(vec![
        s.regime.as_str().into(),
        s.form.as_str().into(),
        s.gamma.into(),
        s.b.into(),
        s.x_switch.into(),
        s.v_at_b.into(),
        s.v_at_x_switch.into(),
    ]);
    Output::from_record(&s, table)
}

/// Surplus grid for `curve`.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub steps: usize,
    pub log: bool,
}

impl Grid {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        if !(self.x_min > 0.0 && self.x_max > self.x_min && self.x_max.is_finite()) {
            return Err(CliError::Usage(format!(
                "grid needs 0 < x-min < x-max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.steps < 2 {
            return Err(CliError::Usage("x-steps must be at least 2".into()));
        }
        let n = self.steps;
        let frac = |i: usize| i as f64 / (n - 1) as f64;
        Ok(if self.log {
            let (a, b) = (self.x_min.ln(), self.x_max.ln());
            (0..n).map(|i| (a + (b - a) * frac(i)).exp()).collect()
        } else {
            (0..n)
                .map(|i| self.x_min + (self.x_max - self.x_min) * frac(i))
                .collect()
        })
    }
}

pub fn curve(cfg: &RunConfig, barrier: Option<f64>, grid: &Grid) -> CliResult<Output> {
    let sol = build(cfg, barrier)?;
    let xs = grid.points()?;
    let strategy = Strategy::optimal(sol.clone());
    let mut table = Table::new(vec!["x", "v", "v_prime", "v_double_prime", "u_star"]);
    for x in xs {
        let (v, v1, v2) = sol.eval(x)?;
        let u = strategy.retention(x)?;
        table.push(vec![x.into(), v.into(), v1.into(), v2.into(), u.into()]);
    }
    Ok(Output::from_table(table))
}

/// Evenly spaced values `lo, lo + step, ..., <= hi`, computed without
/// accumulating round-off.
pub fn range(lo: f64, hi: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Usage(format!(
            "bad range [{}, {}] with step {}",
            lo, hi, step
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + step * k as f64).collect())
}

pub fn sweep_gamma(cfg: &RunConfig, exponents: &[f64]) -> CliResult<Output> {
    let solver = Solver::new(cfg.params)?;
    let mut table = Table::new(vec!["gamma", "b", "x_switch", "v_at_b", "v_at_x_switch"]);
    for &n in exponents {
        let g = 2f64.powf(n);
        let sol = solver.solve(g)?;
        table.push(vec![
            g.into(),
            sol.b.into(),
            sol.x_switch.into(),
            value_at(&sol, sol.b)?.into(),
            value_at(&sol, sol.x_switch)?.into(),
        ]);
    }
    Ok(Output::from_table(table))
}

pub fn sweep_barrier(cfg: &RunConfig, barriers: &[f64], xs: &[f64]) -> CliResult<Output> {
    if !cfg.gamma.is_finite() {
        return Err(CliError::Usage("sweep-barrier needs a finite gamma".into()));
    }
    let solver = Solver::new(cfg.params)?;
    let best = solver.solve(cfg.gamma)?;
    let mut table = Table::new(vec!["b", "x", "v", "v_optimal"]);
    for &b in barriers {
        // Barriers outside every construction's domain are skipped.
        let sol = match solver.with_barrier(cfg.gamma, b) {
            Ok(s) => s,
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        for &x in xs {
            table.push(vec![
                b.into(),
                x.into(),
                sol.value(x)?.into(),
                best.value(x)?.into(),
            ]);
        }
    }
    Ok(Output::from_table(table))
}

/// Strategy choice for `simulate`.
#[derive(Debug, Clone, Copy)]
pub struct StrategySpec {
    pub barrier: Option<f64>,
    pub retention: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Simulated {
    #[serde(flatten)]
    result: SimResult,
    x0: f64,
    gamma: f64,
    barrier: f64,
    /// Closed-form value of the simulated strategy, when it has one.
    closed_form: Option<f64>,
}

pub fn simulate(cfg: &RunConfig, spec: StrategySpec, sim: &SimConfig) -> CliResult<Output> {
    if !cfg.gamma.is_finite() {
        return Err(CliError::Usage("simulation needs a finite gamma".into()));
    }
    let (strategy, closed_form) = match spec.retention {
        Some(u) => {
            let b = match spec.barrier {
                Some(b) => b,
                None => Solver::new(cfg.params)?.optimal_barrier(cfg.gamma)?,
            };
            (Strategy::constant(u, b)?, None)
        }
        None => {
            let sol = build(cfg, spec.barrier)?;
            let v = sol.value(sim.x0)?;
            (Strategy::optimal(sol), Some(v))
        }
    };
    let result = estimate_npv(&strategy, &cfg.params, cfg.gamma, sim)?;
    let s = Simulated {
        result,
        x0: sim.x0,
        gamma: cfg.gamma,
        barrier: strategy.barrier(),
        closed_form,
    };
    let mut table = Table::new(vec![
        "npv_mean",
        "npv_stderr",
        "ruin_fraction",
        "mean_ruin_time",
        "n_paths",
        "closed_form",
    ]);
    table.push(vec![
        s.result.npv_mean.into(),
        s.result.npv_stderr.into(),
        s.result.ruin_fraction.into(),
        opt_cell(s.result.mean_ruin_time),
        (s.result.n_paths as f64).into(),
        opt_cell(s.closed_form),
    ]);
    Output::from_record(&s, table)
}

#[derive(Debug, Serialize)]
struct Verified {
    passes: bool,
    tolerance: f64,
    barrier: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<divopt::VerificationReport>,
}

/// Verification report and whether it passed.
pub fn verify(
    cfg: &RunConfig,
    barrier: Option<f64>,
    perturb: Option<f64>,
) -> CliResult<(Output, bool)> {
    let mut b = barrier;
    if let Some(f) = perturb {
        let base = build(cfg, barrier)?.b;
        b = Some(if base > 0.0 {
            base * (1.0 + f)
        } else {
            f.abs()
        });
    }
    let (passes, failure, report, at) = match build(cfg, b) {
        Ok(sol) => {
            let rep = verify_solution(&sol)?;
            (rep.passes(RESIDUAL_TOL), None, Some(rep), sol.b)
        }
        // A barrier no construction admits cannot solve the equation.
        Err(CliError::Solver(Error::Domain(msg))) if perturb.is_some() => {
            (false, Some(msg), None, b.unwrap_or(0.0))
        }
        Err(e) => return Err(e),
    };
    let v = Verified {
        passes,
        tolerance: RESIDUAL_TOL,
        barrier: at,
        failure,
        report,
    };
    let mut table = Table::new(vec![
        "passes",
        "barrier",
        "max_hjb_residual",
        "worst_x",
        "increasing",
        "concave",
        "ratio_decreasing",
        "smooth_fit",
        "barrier_slope",
        "retention",
    ]);
    let mut row: Vec<Cell> = vec![passes.into(), at.into()];
    match &v.report {
        Some(r) => {
            let f = r.shape_flags;
            row.extend([
                r.max_hjb_residual.into(),
                r.worst_x.into(),
                f.increasing.into(),
                f.concave.into(),
                f.ratio_decreasing.into(),
                f.smooth_fit.into(),
                f.barrier_slope.into(),
                f.retention.into(),
            ]);
        }
        None => row.extend((0..8).map(|_| Cell::Text(String::new()))),
    }
    table.push(row);
    Ok((Output::from_record(&v, table)?, passes))
}

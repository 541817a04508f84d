//! Euler-Maruyama simulation of the controlled surplus with dividend
//! decisions at Poisson arrival times.
//!
//! Path `i` draws from a xoshiro256++ stream seeded through SplitMix64 with
//! `master_seed ^ k`, where `k` is the path index (or the pair index when
//! antithetic pairing is on). Every sub-step consumes exactly one normal and
//! one uniform, and every arrival one exponential, so the two paths of a pair
//! see the same arrival times and opposite Brownian increments.
//!
//! With `bridge_ruin` on, a sub-step that starts and ends at nonnegative
//! surplus still ends in ruin with the Brownian-bridge crossing probability
//! `exp(-2 x_n x_{n+1} / (sigma^2 u^2 h))`. Without it, ruin is only seen at
//! grid points, which overstates the dividend value by `O(sigma sqrt(dt))`.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::policy::Strategy;

/// Largest admissible Euler step.
pub const MAX_DT: f64 = 1e-2;
/// Default Euler step.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default horizon in units of `1/delta`.
pub const DEFAULT_HORIZON: f64 = 40.0;
/// Smallest admissible horizon in units of `1/delta`.
pub const MIN_HORIZON: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: f64,
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Pair path `2k` with path `2k + 1` through negated increments.
    pub antithetic: bool,
    /// Detect ruin between grid points through the bridge probability.
    pub bridge_ruin: bool,
}

impl SimConfig {
    /// Defaults: `dt = 1e-3`, `t_max = 40/delta`, antithetic pairs, bridge
    /// ruin detection.
    pub fn new(params: &ModelParams<f64>, x0: f64, n_paths: usize, master_seed: u64) -> Self {
        Self {
            x0,
            dt: DEFAULT_DT,
            t_max: DEFAULT_HORIZON / params.delta,
            n_paths,
            master_seed,
            antithetic: true,
            bridge_ruin: true,
        }
    }

    pub fn validate(&self, params: &ModelParams<f64>) -> Result<()> {
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(Error::domain(format!(
                "x0 must be positive, got {}",
                self.x0
            )));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::domain(format!(
                "dt must lie in (0, {}], got {}",
                MAX_DT, self.dt
            )));
        }
        let min_t = MIN_HORIZON / params.delta;
        if !(self.t_max >= min_t && self.t_max.is_finite()) {
            return Err(Error::domain(format!(
                "t_max must be at least 20/delta = {}, got {}",
                min_t, self.t_max
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::domain("n_paths must be positive"));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }

    fn stream(&self, path_index: usize) -> (u64, f64) {
        if self.antithetic {
            let sign = if path_index.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            (self.master_seed ^ (path_index / 2) as u64, sign)
        } else {
            (self.master_seed ^ path_index as u64, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub npv_mean: f64,
    pub npv_stderr: f64,
    pub ruin_fraction: f64,
    /// Mean ruin time over ruined paths; `None` if no path was ruined.
    pub mean_ruin_time: Option<f64>,
    pub n_paths: usize,
    /// Bound on the discounted value left beyond the horizon.
    pub truncation_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub surplus: Vec<f64>,
    pub dividend_events: Vec<(f64, f64)>,
    pub ruin_time: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    npv: f64,
    ruin_time: Option<f64>,
    /// Surplus at the horizon, zero if ruined.
    terminal: f64,
}

trait Observer {
    fn step(&mut self, _t: f64, _x: f64) {}
    fn dividend(&mut self, _t: f64, _amount: f64) {}
}

struct Silent;
impl Observer for Silent {}

impl Observer for PathRecord {
    fn step(&mut self, t: f64, x: f64) {
        self.times.push(t);
        self.surplus.push(x);
    }

    fn dividend(&mut self, t: f64, amount: f64) {
        self.dividend_events.push((t, amount));
    }
}

fn arrival_law(gamma: f64) -> Result<Exp<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "simulation needs a finite positive gamma, got {}",
            gamma
        )));
    }
    Exp::new(gamma).map_err(|e| Error::domain(e.to_string()))
}

fn run_path<O: Observer>(
    strategy: &Strategy<f64>,
    p: &ModelParams<f64>,
    arrivals: &Exp<f64>,
    cfg: &SimConfig,
    path_index: usize,
    obs: &mut O,
) -> Result<Outcome> {
    let (seed, sign) = cfg.stream(path_index);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut t = 0.0;
    let mut x = cfg.x0;
    let mut next = arrivals.sample(&mut rng);
    let mut npv = 0.0;
    obs.step(t, x);
    while t < cfg.t_max {
        let room = cfg.dt.min(cfg.t_max - t);
        let to_arrival = next - t;
        let arrival = to_arrival <= room;
        let h = if arrival { to_arrival } else { room };
        let z: f64 = rng.sample::<f64, _>(StandardNormal) * sign;
        let w: f64 = rng.random();
        // X = 0 is solvent; use the right limit of the control there.
        let u = strategy.retention(x.max(f64::MIN_POSITIVE))?;
        let vol = p.sigma * u;
        let start = x;
        x += (p.eta - (1.0 - u) * p.mu) * h + vol * h.sqrt() * z;
        t = if arrival { next } else { t + h };
        obs.step(t, x);
        let crossed = cfg.bridge_ruin
            && x >= 0.0
            && vol > 0.0
            && w < (-2.0 * start * x / (vol * vol * h)).exp();
        if x < 0.0 || crossed {
            return Ok(Outcome {
                npv,
                ruin_time: Some(t),
                terminal: 0.0,
            });
        }
        if arrival {
            let pay = strategy.dividend(x);
            if pay > 0.0 {
                npv += (-p.delta * t).exp() * pay;
                x -= pay;
                obs.dividend(t, pay);
            }
            next = t + arrivals.sample(&mut rng);
        }
    }
    Ok(Outcome {
        npv,
        ruin_time: None,
        terminal: x,
    })
}

/// Full trajectory of one path, including every sub-step.
pub fn simulate_path(
    strategy: &Strategy<f64>,
    params: &ModelParams<f64>,
    gamma: f64,
    config: &SimConfig,
    path_index: usize,
) -> Result<PathRecord> {
    config.validate(params)?;
    let arrivals = arrival_law(gamma)?;
    let mut rec = PathRecord {
        times: Vec::new(),
        surplus: Vec::new(),
        dividend_events: Vec::new(),
        ruin_time: None,
    };
    let out = run_path(strategy, params, &arrivals, config, path_index, &mut rec)?;
    rec.ruin_time = out.ruin_time;
    Ok(rec)
}

/// Pairwise summation; the split points depend only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Monte Carlo estimate of the expected discounted dividends of `strategy`.
pub fn estimate_npv(
    strategy: &Strategy<f64>,
    params: &ModelParams<f64>,
    gamma: f64,
    config: &SimConfig,
) -> Result<SimResult> {
    config.validate(params)?;
    let arrivals = arrival_law(gamma)?;
    let outcomes: Vec<Outcome> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| run_path(strategy, params, &arrivals, config, i, &mut Silent))
        .collect::<Result<_>>()?;

    // Antithetic pairs are the independent samples.
    let samples: Vec<f64> = if config.antithetic {
        outcomes
            .chunks_exact(2)
            .map(|c| 0.5 * (c[0].npv + c[1].npv))
            .collect()
    } else {
        outcomes.iter().map(|o| o.npv).collect()
    };
    let m = samples.len() as f64;
    let mean = pairwise_sum(&samples) / m;
    let npv_stderr = if samples.len() > 1 {
        let dev: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
        (pairwise_sum(&dev) / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };

    let n = outcomes.len() as f64;
    let ruin_times: Vec<f64> = outcomes.iter().filter_map(|o| o.ruin_time).collect();
    let mean_ruin_time = if ruin_times.is_empty() {
        None
    } else {
        Some(pairwise_sum(&ruin_times) / ruin_times.len() as f64)
    };
    let terminal: Vec<f64> = outcomes.iter().map(|o| o.terminal).collect();
    let mean_terminal = pairwise_sum(&terminal) / n;
    let d = params.delta;
    let truncation_bound = (-d * config.t_max).exp() * (gamma / (gamma + d)) * mean_terminal;

    Ok(SimResult {
        npv_mean: mean,
        npv_stderr,
        ruin_fraction: ruin_times.len() as f64 / n,
        mean_ruin_time,
        n_paths: outcomes.len(),
        truncation_bound,
    })
}

//! Closed-form value functions, barriers and switch levels for every regime,
//! plus the singular-control limits.

mod builders;
mod transform;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Case, ExpPair, ModelParams, Regime};
use crate::scalar::{lit, Real};

pub use builders::Solver;
pub use transform::{fbar, hbeta, ExpLinearMap, GammaMap, Transform, TABLE_NODES};

/// The analytic formula used on one surplus interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece<T> {
    /// `h(x - shift)` for an exponential pair `h`.
    Hyperbolic { pair: ExpPair<T>, shift: T },
    /// `coef x^exponent`.
    Power { coef: T, exponent: T },
    /// `coef e^{lambda (x - anchor)} + slope x + intercept`.
    Tail {
        coef: T,
        lambda: T,
        anchor: T,
        slope: T,
        intercept: T,
    },
    /// Reinsurance branch parametrised by `x1`; `v' = e^{-z}`.
    Retention { map: ExpLinearMap<T> },
    /// Reinsurance branch parametrised by `x2`; `v' = e^{-z}`.
    GammaBranch {
        map: GammaMap<T>,
        delta: T,
        gamma: T,
        eta_bar: T,
        excess: T,
        barrier: T,
        v_barrier: T,
    },
}

/// A piece of the value function on `(lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment<T> {
    pub lo: T,
    pub hi: T,
    pub piece: Piece<T>,
}

impl<T: Real> Segment<T> {
    /// `(v, v', v'')` from the segment formula. Also valid at the end points.
    pub fn eval(&self, x: T) -> Result<(T, T, T)> {
        match &self.piece {
            Piece::Hyperbolic { pair, shift } => {
                let y = x - *shift;
                Ok((pair.value(y), pair.d1(y), pair.d2(y)))
            }
            Piece::Power { coef, exponent } => {
                let k = *exponent;
                if x == T::zero() {
                    return Ok((T::zero(), T::infinity(), T::neg_infinity()));
                }
                let v = *coef * x.powf(k);
                Ok((v, v * k / x, v * k * (k - T::one()) / (x * x)))
            }
            Piece::Tail {
                coef,
                lambda,
                anchor,
                slope,
                intercept,
            } => {
                let s = *lambda * (x - *anchor);
                // Far in the tail the exponential only contributes subnormal
                // noise.
                let e = if s < lit(-50.0) { T::zero() } else { s.exp() };
                let ce = *coef * e;
                Ok((
                    ce + *slope * x + *intercept,
                    ce * *lambda + *slope,
                    ce * *lambda * *lambda,
                ))
            }
            Piece::Retention { map } => {
                let z = map.inverse(x)?;
                let v1 = (-z).exp();
                Ok((map.value(z), v1, -v1 / map.derivative(z)))
            }
            Piece::GammaBranch {
                map,
                delta,
                gamma,
                eta_bar,
                excess,
                barrier,
                v_barrier,
            } => {
                let z = map.inverse(x)?;
                let (_, dx, _) = map.state(z)?;
                let v1 = (-z).exp();
                let v = (v1 * (dx / *eta_bar - *excess) + *gamma * (*v_barrier + x - *barrier))
                    / (*delta + *gamma);
                Ok((v, v1, -v1 / dx))
            }
        }
    }

    /// The change of variable behind this segment, if any.
    pub fn transform(&self) -> Option<Transform<'_, T>> {
        match &self.piece {
            Piece::Retention { map } => Some(Transform::X1(map)),
            Piece::GammaBranch { map, .. } => Some(Transform::X2(map)),
            _ => None,
        }
    }
}

/// A value function with its barrier, switch level and constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution<T> {
    pub params: ModelParams<T>,
    /// Dividend decision intensity; infinite for the singular-control limit.
    pub gamma: T,
    /// Classification of `(params, gamma)`.
    pub regime: Regime<T>,
    /// Which case's formulas built the function.
    pub form: Case,
    /// Whether `b` is the optimal barrier for `gamma`.
    pub optimal: bool,
    pub b: T,
    pub x_switch: T,
    pub segments: Vec<Segment<T>>,
    pub constants: Vec<(String, T)>,
}

impl<T: Real> Solution<T> {
    pub fn is_limit(&self) -> bool {
        self.gamma.is_infinite()
    }

    pub fn constant(&self, name: &str) -> Option<T> {
        self.constants
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    /// Interior breakpoints in increasing order.
    pub fn breakpoints(&self) -> Vec<T> {
        self.segments
            .iter()
            .take(self.segments.len().saturating_sub(1))
            .map(|s| s.hi)
            .collect()
    }

    /// Index of the segment owning `x`; breakpoints belong to the left piece.
    pub fn segment_index(&self, x: T) -> usize {
        self.segments
            .partition_point(|s| s.hi < x)
            .min(self.segments.len() - 1)
    }

    /// `(v, v', v'')` at `x > 0`.
    pub fn eval(&self, x: T) -> Result<(T, T, T)> {
        if !(x > T::zero()) {
            return Err(Error::domain(format!(
                "value function needs x > 0, got {}",
                x
            )));
        }
        self.segments[self.segment_index(x)].eval(x)
    }

    pub fn value(&self, x: T) -> Result<T> {
        self.eval(x).map(|v| v.0)
    }

    /// Right limit of `(v, v', v'')` at the origin.
    pub fn at_origin(&self) -> Result<(T, T, T)> {
        self.segments[0].eval(T::zero())
    }

    /// Decay rate of the top exponential, `None` for the limit solutions.
    pub fn tail_lambda(&self) -> Option<T> {
        match self.segments.last().map(|s| &s.piece) {
            Some(Piece::Tail { coef, lambda, .. }) if *coef != T::zero() => Some(*lambda),
            _ => None,
        }
    }

    /// Largest finite breakpoint, or the barrier if larger.
    pub fn top_breakpoint(&self) -> T {
        self.breakpoints()
            .into_iter()
            .fold(self.b.max(self.x_switch), |m, v| m.max(v))
    }
}

/// Builds the optimal solution for `gamma`.
pub fn solve<T: Real>(params: &ModelParams<T>, gamma: T) -> Result<Solution<T>> {
    Solver::new(*params)?.solve(gamma)
}

/// Builds the solution for barrier `b`, choosing the case builder whose
/// domain contains `b`.
pub fn solve_with_barrier<T: Real>(params: &ModelParams<T>, gamma: T, b: T) -> Result<Solution<T>> {
    Solver::new(*params)?.with_barrier(gamma, b)
}

/// The singular-control (`gamma -> infinity`) solution of the branch.
pub fn asymptotic<T: Real>(params: &ModelParams<T>) -> Result<Solution<T>> {
    Solver::new(*params)?.asymptotic()
}

pub fn eval<T: Real>(sol: &Solution<T>, x: T) -> Result<(T, T, T)> {
    sol.eval(x)
}

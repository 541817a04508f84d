//! Feedback controls: the retention fraction and the dividend rule applied
//! at observation times.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::valuefn::Solution;

/// Tolerance on the analytic retention before it counts as inconsistent.
const CLAMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy<T> {
    /// Retention `u*` and barrier of a constructed solution.
    Optimal(Solution<T>),
    /// Fixed retention fraction; pay down to `barrier` (which may be
    /// infinite, meaning never pay).
    ConstantRetention { u: T, barrier: T },
}

impl<T: Real> Strategy<T> {
    pub fn optimal(sol: Solution<T>) -> Self {
        Strategy::Optimal(sol)
    }

    pub fn constant(u: T, barrier: T) -> Result<Self> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::domain(format!(
                "retention must lie in [0, 1], got {}",
                u
            )));
        }
        if !(barrier >= T::zero()) {
            return Err(Error::domain(format!(
                "barrier must be nonnegative, got {}",
                barrier
            )));
        }
        Ok(Strategy::ConstantRetention { u, barrier })
    }

    pub fn barrier(&self) -> T {
        match self {
            Strategy::Optimal(s) => s.b,
            Strategy::ConstantRetention { barrier, .. } => *barrier,
        }
    }

    /// Retained fraction of the risk at surplus `x > 0`.
    pub fn retention(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(Error::domain(format!("retention needs x > 0, got {}", x)));
        }
        match self {
            Strategy::ConstantRetention { u, .. } => Ok(*u),
            Strategy::Optimal(sol) => {
                if x >= sol.x_switch {
                    return Ok(T::one());
                }
                let (_, v1, v2) = sol.eval(x)?;
                let p = &sol.params;
                let u = if v2 < T::zero() {
                    -p.mu * v1 / (p.sigma * p.sigma * v2)
                } else {
                    T::one()
                };
                let tol = lit::<T>(CLAMP_TOL);
                if !(u >= -tol && u <= T::one() + tol) {
                    return Err(Error::numerical(
                        to_f64(x),
                        format!("retention {} outside [0, 1]", u),
                    ));
                }
                Ok(u.max(T::zero()).min(T::one()))
            }
        }
    }

    /// Amount paid at an observation time with pre-decision surplus `x`.
    pub fn dividend(&self, x: T) -> T {
        (x - self.barrier()).max(T::zero())
    }
}

pub fn retention<T: Real>(strategy: &Strategy<T>, x: T) -> Result<T> {
    strategy.retention(x)
}

pub fn dividend<T: Real>(strategy: &Strategy<T>, x: T) -> T {
    strategy.dividend(x)
}

//! Floating point abstraction shared by the analytic core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// A real scalar the solver can run on.
///
/// The associated constants are the default tolerances for the type; the
/// single precision values are loose because the closed forms chain many
/// transcendental evaluations.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute argument tolerance for root finding and inversion.
    const ROOT_TOL: f64;
    /// Relative tolerance for adaptive quadrature.
    const QUAD_TOL: f64;
    /// Agreement demanded between independently computed quantities.
    const CHECK_TOL: f64;
}

impl Real for f64 {
    const ROOT_TOL: f64 = 1e-12;
    const QUAD_TOL: f64 = 1e-10;
    const CHECK_TOL: f64 = 1e-8;
}

impl Real for f32 {
    const ROOT_TOL: f64 = 1e-6;
    const QUAD_TOL: f64 = 1e-5;
    const CHECK_TOL: f64 = 1e-3;
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn root_tol<T: Real>() -> T {
    lit(T::ROOT_TOL)
}

#[inline]
pub(crate) fn quad_tol<T: Real>() -> T {
    lit(T::QUAD_TOL)
}

//! Optimal periodic dividends with proportional reinsurance for a
//! diffusion-approximated insurance surplus.
//!
//! The analytic core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The aliases at the crate root fix the
//! scalar to `f64`; the Monte Carlo engine is `f64` only.

// `!(x > 0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod policy;
pub mod scalar;
pub mod valuefn;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Branch, Case};
pub use montecarlo::{estimate_npv, simulate_path, PathRecord, SimConfig, SimResult};
pub use scalar::Real;
pub use verify::ShapeFlags;

pub type Params = model::ModelParams<f64>;
pub type Thresholds = model::Thresholds<f64>;
pub type Regime = model::Regime<f64>;
pub type Solver = valuefn::Solver<f64>;
pub type Solution = valuefn::Solution<f64>;
pub type Strategy = policy::Strategy<f64>;
pub type VerificationReport = verify::VerificationReport<f64>;
pub type LimitTable = verify::LimitTable<f64>;

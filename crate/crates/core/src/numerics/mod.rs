//! Root finding, quadrature and the gamma-law special functions.

mod gamma;
mod quad;
mod roots;

pub use gamma::{gamma_cdf, gamma_inv_cdf, gamma_pdf, ln_gamma, regularized_lower_gamma, GammaLaw};
pub use quad::{integrate, integrate_n};
pub use roots::{
    expand_upper, find_root, invert_monotone, newton_increasing, quadratic_roots, Bracket,
};

use serde::Serialize;

use super::roots::{invert_monotone, Bracket};
use crate::error::{Error, Result};
use crate::scalar::{lit, root_tol, Real};

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = lit::<T>(0.5);
    if x < half {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = lit::<T>(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + lit::<T>(*c) / (x + lit(i as f64));
    }
    let t = x + lit::<T>(LANCZOS_G) + half;
    half * (lit::<T>(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Regularised lower incomplete gamma `P(a, x)`.
///
/// Series for `x < a + 1`, Lentz continued fraction for the complement
/// otherwise.
pub fn regularized_lower_gamma<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x.is_infinite() {
        return T::one();
    }
    let log_prefix = -x + a * x.ln() - ln_gamma(a);
    if x < a + T::one() {
        let mut ap = a;
        let mut del = T::one() / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap = ap + T::one();
            del = del * x / ap;
            sum = sum + del;
            if del.abs() < sum.abs() * T::epsilon() {
                break;
            }
        }
        (sum.ln() + log_prefix).exp().min(T::one())
    } else {
        let tiny = T::min_positive_value() / T::epsilon();
        let two = lit::<T>(2.0);
        let mut b = x + T::one() - a;
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..10_000 {
            let fi = lit::<T>(i as f64);
            let an = -fi * (fi - a);
            b = b + two;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = T::one() / d;
            let del = d * c;
            h = h * del;
            if (del - T::one()).abs() < T::epsilon() {
                break;
            }
        }
        (T::one() - (h.ln() + log_prefix).exp()).max(T::zero())
    }
}

/// Gamma distribution with the given shape and rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaLaw<T> {
    pub shape: T,
    pub rate: T,
    #[serde(skip)]
    ln_norm: T,
}

impl<T: Real> GammaLaw<T> {
    pub fn new(shape: T, rate: T) -> Result<Self> {
        if !(shape > T::one()) || !(rate > T::zero()) || !shape.is_finite() || !rate.is_finite() {
            return Err(Error::domain(format!(
                "gamma law needs shape > 1 and rate > 0, got ({}, {})",
                shape, rate
            )));
        }
        Ok(Self {
            shape,
            rate,
            ln_norm: shape * rate.ln() - ln_gamma(shape),
        })
    }

    /// Log density, `-inf` at the origin.
    pub fn ln_pdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::neg_infinity();
        }
        self.ln_norm + (self.shape - T::one()) * x.ln() - self.rate * x
    }

    pub fn pdf(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            self.ln_pdf(x).exp()
        }
    }

    pub fn cdf(&self, x: T) -> T {
        regularized_lower_gamma(self.shape, self.rate * x)
    }

    pub fn mean(&self) -> T {
        self.shape / self.rate
    }

    /// Quantile function by bracketed inversion of the cdf.
    pub fn inv_cdf(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::domain(format!("probability {} outside (0, 1)", p)));
        }
        let mut hi = self.mean() * lit(2.0);
        while self.cdf(hi) < p {
            hi = hi * lit(2.0);
            if !hi.is_finite() {
                return Err(Error::numerical(f64::INFINITY, "quantile bracket overflow"));
            }
        }
        invert_monotone(|x| self.cdf(x), p, Bracket::new(T::zero(), hi)?, root_tol())
    }
}

pub fn gamma_pdf<T: Real>(law: &GammaLaw<T>, x: T) -> T {
    law.pdf(x)
}

pub fn gamma_cdf<T: Real>(law: &GammaLaw<T>, x: T) -> T {
    law.cdf(x)
}

pub fn gamma_inv_cdf<T: Real>(law: &GammaLaw<T>, p: T) -> Result<T> {
    law.inv_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            let g = ln_gamma(n as f64);
            assert!(
                (g - fact.ln()).abs() < 1e-13 * fact.ln().abs().max(1.0),
                "n={}",
                n
            );
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn shape_two_closed_forms() {
        let law = GammaLaw::new(2.0f64, 1.0).unwrap();
        assert!((law.pdf(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((law.cdf(1.0) - 0.264_241_117_657_115_4).abs() < 1e-15);
        assert_eq!(law.cdf(0.0), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GammaLaw::new(1.0f64, 1.0).is_err());
        assert!(GammaLaw::new(2.0f64, 0.0).is_err());
        let law = GammaLaw::new(2.0f64, 1.0).unwrap();
        assert!(law.inv_cdf(0.0).is_err());
        assert!(law.inv_cdf(1.0).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let law = GammaLaw::new(2.0f64, 1.0).unwrap();
        for x in [0.1, 1.0, 5.0] {
            let back = law.inv_cdf(law.cdf(x)).unwrap();
            assert!((back - x).abs() < 1e-9, "x={} back={}", x, back);
        }
    }
}

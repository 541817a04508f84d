//! Model parameters, characteristic roots, the scalar functions driving the
//! barrier equations, and the regime thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{expand_upper, find_root, integrate, quadratic_roots, Bracket, GammaLaw};
use crate::scalar::{lit, quad_tol, root_tol, to_f64, Real};

/// Market and contract constants.
///
/// `delta` is the discount rate, `sigma` the diffusion volatility, `mu` the
/// reinsurer's safety loading and `eta` the insurer's own loading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub delta: T,
    pub sigma: T,
    pub mu: T,
    pub eta: T,
}

/// Which family of closed forms applies, decided by the loadings alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `mu >= 2 eta`: full retention is always optimal.
    A,
    /// `eta < mu < 2 eta`: reinsurance is bought at low surplus.
    B,
    /// `mu == eta`: cheap reinsurance.
    C,
}

impl<T: Real> ModelParams<T> {
    pub fn new(delta: T, sigma: T, mu: T, eta: T) -> Result<Self> {
        let p = Self {
            delta,
            sigma,
            mu,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta, self.sigma, self.mu, self.eta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("parameters must be finite"));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::domain(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.sigma > T::zero()) {
            return Err(Error::domain(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.eta > T::zero()) {
            return Err(Error::domain(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.mu >= self.eta) {
            return Err(Error::domain(format!(
                "need mu >= eta, got mu={} eta={}",
                self.mu, self.eta
            )));
        }
        Ok(())
    }

    /// `2 sigma^2 / mu^2`.
    pub fn eta_bar(&self) -> T {
        lit::<T>(2.0) * self.sigma * self.sigma / (self.mu * self.mu)
    }

    /// `delta * eta_bar`.
    pub fn d(&self) -> T {
        self.delta * self.eta_bar()
    }

    /// `1 + delta * eta_bar`.
    pub fn kappa(&self) -> T {
        T::one() + self.d()
    }

    pub fn branch(&self) -> Branch {
        if self.mu >= lit::<T>(2.0) * self.eta {
            Branch::A
        } else if self.mu == self.eta {
            Branch::C
        } else {
            Branch::B
        }
    }

    /// Normalising coefficient `eta_bar (mu - eta) / (1 + delta eta_bar)`.
    pub fn c21(&self) -> T {
        self.eta_bar() * (self.mu - self.eta) / self.kappa()
    }

    /// `(delta eta_bar mu + 2 eta - mu) / (2 delta eta_bar (mu - eta))`.
    pub fn c22(&self) -> T {
        let d = self.d();
        (d * self.mu + lit::<T>(2.0) * self.eta - self.mu)
            / (lit::<T>(2.0) * d * (self.mu - self.eta))
    }

    /// Switch level of branch B, above which full retention is optimal.
    pub fn x_bar(&self) -> Result<T> {
        if self.branch() != Branch::B {
            return Err(Error::Regime(
                "x_bar is defined for eta < mu < 2 eta".into(),
            ));
        }
        let k = self.kappa();
        Ok(self.c21() / k * self.c22().ln()
            + self.eta_bar() * (lit::<T>(2.0) * self.eta - self.mu) / (lit::<T>(2.0) * k))
    }

    /// Switch level of branch C.
    pub fn x_hat(&self) -> Result<T> {
        if self.branch() != Branch::C {
            return Err(Error::Regime("x_hat is defined for mu = eta".into()));
        }
        Ok(self.sigma * self.sigma / (self.mu * self.kappa()))
    }

    /// Exponent `delta eta_bar / (1 + delta eta_bar)` of the cheap-reinsurance
    /// power branch.
    pub fn power(&self) -> T {
        self.d() / self.kappa()
    }
}

/// Roots of the characteristic polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharRoots<T> {
    pub theta_plus: T,
    pub theta_minus: T,
    pub lambda_gamma: T,
}

/// `(theta_minus, theta_plus)`, roots of `sigma^2/2 r^2 + eta r - delta`.
pub fn theta_roots<T: Real>(p: &ModelParams<T>) -> Result<(T, T)> {
    let half = lit::<T>(0.5);
    quadratic_roots(half * p.sigma * p.sigma, p.eta, -p.delta)
}

/// Negative root of `sigma^2/2 r^2 + eta r - (delta + gamma)` in radical form.
pub fn lambda_radical<T: Real>(p: &ModelParams<T>, gamma: T) -> T {
    let s2 = p.sigma * p.sigma;
    (-p.eta - (p.eta * p.eta + lit::<T>(2.0) * s2 * (p.delta + gamma)).sqrt()) / s2
}

pub fn char_roots<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<CharRoots<T>> {
    p.validate()?;
    if !(gamma > T::zero()) {
        return Err(Error::domain(format!(
            "gamma must be positive, got {}",
            gamma
        )));
    }
    let (theta_minus, theta_plus) = theta_roots(p)?;
    let half = lit::<T>(0.5);
    let (lambda_gamma, _) = quadratic_roots(half * p.sigma * p.sigma, p.eta, -(p.delta + gamma))?;
    Ok(CharRoots {
        theta_plus,
        theta_minus,
        lambda_gamma,
    })
}

/// `p e^{tp x} + q e^{tm x}` with `tp > 0 > tm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpPair<T> {
    pub p: T,
    pub q: T,
    pub tp: T,
    pub tm: T,
}

impl<T: Real> ExpPair<T> {
    pub fn value(&self, x: T) -> T {
        self.p * (self.tp * x).exp() + self.q * (self.tm * x).exp()
    }

    pub fn d1(&self, x: T) -> T {
        self.p * self.tp * (self.tp * x).exp() + self.q * self.tm * (self.tm * x).exp()
    }

    pub fn d2(&self, x: T) -> T {
        self.p * self.tp * self.tp * (self.tp * x).exp()
            + self.q * self.tm * self.tm * (self.tm * x).exp()
    }

    /// `h / h'`, evaluated without overflow for large `x`.
    pub fn ratio(&self, x: T) -> T {
        let e = ((self.tm - self.tp) * x).exp();
        (self.p + self.q * e) / (self.p * self.tp + self.q * self.tm * e)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            p: self.p * c,
            q: self.q * c,
            ..*self
        }
    }
}

/// `e^{theta+ x} - e^{theta- x}`.
pub fn h1<T: Real>(p: &ModelParams<T>) -> Result<ExpPair<T>> {
    let (tm, tp) = theta_roots(p)?;
    Ok(ExpPair {
        p: T::one(),
        q: -T::one(),
        tp,
        tm,
    })
}

fn pair_from_values<T: Real>(v0: T, d0: T, tm: T, tp: T) -> ExpPair<T> {
    // The combination with h(0) = v0 and h'(0) = d0.
    let span = tp - tm;
    ExpPair {
        p: (d0 - tm * v0) / span,
        q: (tp * v0 - d0) / span,
        tp,
        tm,
    }
}

/// Branch B hyperbolic solution with `h2(0) = (2 eta - mu)/(2 delta)` and
/// `h2'(0) = 1`.
pub fn h2<T: Real>(p: &ModelParams<T>) -> Result<ExpPair<T>> {
    let (tm, tp) = theta_roots(p)?;
    let v0 = (lit::<T>(2.0) * p.eta - p.mu) / (lit::<T>(2.0) * p.delta);
    Ok(pair_from_values(v0, T::one(), tm, tp))
}

/// Branch C hyperbolic solution continuing `x^p` in C^1 fashion at `x_hat`.
pub fn h3<T: Real>(p: &ModelParams<T>) -> Result<ExpPair<T>> {
    let (tm, tp) = theta_roots(p)?;
    let xh = p.x_hat()?;
    let pw = p.power();
    Ok(pair_from_values(
        xh.powf(pw),
        pw * xh.powf(pw - T::one()),
        tm,
        tp,
    ))
}

fn positive_b<T: Real>(b: T) -> Result<()> {
    if b > T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "barrier argument must be positive, got {}",
            b
        )))
    }
}

pub fn g1<T: Real>(p: &ModelParams<T>, b: T) -> Result<T> {
    positive_b(b)?;
    Ok(h1(p)?.ratio(b))
}

pub fn g2<T: Real>(p: &ModelParams<T>, b: T) -> Result<T> {
    positive_b(b)?;
    Ok(h2(p)?.ratio(b))
}

pub fn g4<T: Real>(p: &ModelParams<T>, b: T) -> Result<T> {
    positive_b(b)?;
    Ok(h3(p)?.ratio(b))
}

fn sqrt_term<T: Real>(p: &ModelParams<T>, gamma: T) -> T {
    p.eta + (p.eta * p.eta + lit::<T>(2.0) * p.sigma * p.sigma * (p.delta + gamma)).sqrt()
}

/// Right-hand side of the barrier equations; increasing in `gamma`.
pub fn f1<T: Real>(p: &ModelParams<T>, gamma: T) -> T {
    p.eta * gamma / (p.delta * (p.delta + gamma)) - p.sigma * p.sigma / sqrt_term(p, gamma)
}

/// Upper end `alpha_gamma` of the gamma-law branch, in the `y = e^z` scale.
pub fn alpha<T: Real>(p: &ModelParams<T>, gamma: T) -> T {
    (gamma + p.delta) / gamma * (T::one() - p.mu / sqrt_term(p, gamma))
}

/// Gamma law with shape `eta_bar (delta + gamma) + 1` and rate `gamma eta_bar`.
pub fn gamma_law<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<GammaLaw<T>> {
    let eb = p.eta_bar();
    GammaLaw::new(eb * (p.delta + gamma) + T::one(), gamma * eb)
}

fn gamma1_closed<T: Real>(p: &ModelParams<T>, eta: T) -> T {
    let two = lit::<T>(2.0);
    p.delta / p.mu * (two * p.delta * p.sigma * p.sigma / p.mu + two * eta - p.mu)
}

fn require_b_below_gamma1<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<()> {
    if p.branch() != Branch::B {
        return Err(Error::Regime("needs eta < mu < 2 eta".into()));
    }
    let g1c = gamma1_closed(p, p.eta);
    if !(gamma > T::zero() && gamma <= g1c) {
        return Err(Error::Regime(format!(
            "gamma {} outside (0, gamma1={}]",
            gamma, g1c
        )));
    }
    Ok(())
}

/// `alpha_gamma`, restricted to branch B below `gamma1`.
pub fn f2<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<T> {
    require_b_below_gamma1(p, gamma)?;
    Ok(alpha(p, gamma))
}

/// Logarithm of the left side of the `gamma2` equation.
///
/// Both sides grow like `e^{eta_bar gamma alpha}`, so the comparison is done
/// in logarithms.
pub fn ln_f3<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<T> {
    require_b_below_gamma1(p, gamma)?;
    let eb = p.eta_bar();
    let a = alpha(p, gamma);
    let k = eb * (p.delta + gamma) + T::one();
    let ln_lead = (p.sigma * p.sigma / p.mu).ln() + eb * gamma * a - k * a.ln();
    // Substituting y = e^t keeps the integrand smooth for large alpha; the
    // exponent is convex, so its maximum sits at an end point.
    let hi = a.ln().max(T::zero());
    let phi = |t: T| eb * gamma * t.exp() - k * t;
    let shift = phi(T::zero()).max(phi(hi));
    let tail = integrate(|t: T| (phi(t) - shift).exp(), T::zero(), hi, quad_tol())?;
    let ln_tail = (eb * (p.mu - p.eta)).ln() + shift + tail.ln();
    let m = ln_lead.max(ln_tail);
    Ok(m + ((ln_lead - m).exp() + (ln_tail - m).exp()).ln())
}

pub fn ln_f4<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<T> {
    require_b_below_gamma1(p, gamma)?;
    let eb = p.eta_bar();
    Ok((eb * (p.mu - p.eta)).ln() + eb * gamma)
}

/// Left side of the `gamma2` equation.
pub fn f3<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<T> {
    ln_f3(p, gamma).map(|v| v.exp())
}

pub fn f4<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<T> {
    ln_f4(p, gamma).map(|v| v.exp())
}

/// Regime thresholds relevant to the parameter branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds<T> {
    pub branch: Branch,
    pub gamma0: Option<T>,
    pub gamma1: Option<T>,
    pub gamma2: Option<T>,
    pub gamma_bar1: Option<T>,
}

fn root_of_f1<T: Real>(p: &ModelParams<T>, level: T) -> Result<T> {
    let f = |g: T| f1(p, g) - level;
    let br = expand_upper(f, lit(1e-8), T::one(), lit(1e6))?;
    find_root(f, br, root_tol())
}

fn agree<T: Real>(name: &str, closed: T, found: T) -> Result<()> {
    let tol = lit::<T>(T::CHECK_TOL) * closed.abs().max(T::one());
    if (closed - found).abs() <= tol {
        Ok(())
    } else {
        Err(Error::numerical(
            to_f64(found),
            format!(
                "{} closed form {} disagrees with root {}",
                name, closed, found
            ),
        ))
    }
}

/// Computes the thresholds of the parameter branch, each closed form checked
/// against a root of `f1`.
pub fn thresholds<T: Real>(p: &ModelParams<T>) -> Result<Thresholds<T>> {
    p.validate()?;
    let branch = p.branch();
    let mut t = Thresholds {
        branch,
        gamma0: None,
        gamma1: None,
        gamma2: None,
        gamma_bar1: None,
    };
    let two = lit::<T>(2.0);
    match branch {
        Branch::A => {
            let s = p.sigma * p.delta / p.eta;
            let closed = s * s / two;
            agree("gamma0", closed, root_of_f1(p, T::zero())?)?;
            t.gamma0 = Some(closed);
        }
        Branch::B => {
            let closed = gamma1_closed(p, p.eta);
            let level = (two * p.eta - p.mu) / (two * p.delta);
            agree("gamma1", closed, root_of_f1(p, level)?)?;
            t.gamma1 = Some(closed);
            let lo = closed * lit(1e-6);
            let hi = closed * (T::one() - lit(1e-9));
            let mut err = None;
            let g2 = find_root(
                |g| match (ln_f3(p, g), ln_f4(p, g)) {
                    (Ok(a), Ok(b)) => a - b,
                    (Err(e), _) | (_, Err(e)) => {
                        err = Some(e);
                        T::nan()
                    }
                },
                Bracket::new(lo, hi)?,
                root_tol(),
            );
            if let Some(e) = err {
                return Err(e);
            }
            t.gamma2 = Some(g2?);
        }
        Branch::C => {
            let closed = gamma1_closed(p, p.mu);
            agree("gamma_bar1", closed, root_of_f1(p, p.mu / (two * p.delta))?)?;
            t.gamma_bar1 = Some(closed);
        }
    }
    Ok(t)
}

/// The seven analytic cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    A1,
    A2,
    B1,
    B2,
    B3,
    C1,
    C2,
}

impl Case {
    pub fn branch(&self) -> Branch {
        match self {
            Case::A1 | Case::A2 => Branch::A,
            Case::B1 | Case::B2 | Case::B3 => Branch::B,
            Case::C1 | Case::C2 => Branch::C,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Case::A1 => "A1",
            Case::A2 => "A2",
            Case::B1 => "B1",
            Case::B2 => "B2",
            Case::B3 => "B3",
            Case::C1 => "C1",
            Case::C2 => "C2",
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A classified case together with the thresholds it was decided by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime<T> {
    pub case: Case,
    pub thresholds: Thresholds<T>,
}

impl<T: Real> Thresholds<T> {
    /// Case for `gamma`; a value exactly on a threshold goes to the lower case.
    pub fn case_for(&self, gamma: T) -> Case {
        let above = |t: Option<T>| t.is_some_and(|t| gamma > t);
        match self.branch {
            Branch::A => {
                if above(self.gamma0) {
                    Case::A1
                } else {
                    Case::A2
                }
            }
            Branch::B => {
                if above(self.gamma1) {
                    Case::B1
                } else if above(self.gamma2) {
                    Case::B2
                } else {
                    Case::B3
                }
            }
            Branch::C => {
                if above(self.gamma_bar1) {
                    Case::C1
                } else {
                    Case::C2
                }
            }
        }
    }

    pub fn classify(&self, gamma: T) -> Result<Regime<T>> {
        if !(gamma > T::zero()) {
            return Err(Error::domain(format!(
                "gamma must be positive, got {}",
                gamma
            )));
        }
        Ok(Regime {
            case: self.case_for(gamma),
            thresholds: *self,
        })
    }
}

pub fn classify<T: Real>(p: &ModelParams<T>, gamma: T) -> Result<Regime<T>> {
    thresholds(p)?.classify(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row1() -> ModelParams<f64> {
        ModelParams::new(0.5, 0.3, 1.2, 0.2).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(0.0, 0.3, 1.2, 0.2).is_err());
        assert!(ModelParams::new(0.5, -0.3, 1.2, 0.2).is_err());
        assert!(ModelParams::new(0.5, 0.3, 0.1, 0.2).is_err());
        assert!(ModelParams::new(0.5, 0.3, 1.2, f64::NAN).is_err());
    }

    #[test]
    fn branch_boundaries() {
        assert_eq!(
            ModelParams::new(1.0, 0.3, 0.4, 0.2).unwrap().branch(),
            Branch::A
        );
        assert_eq!(
            ModelParams::new(1.0, 0.3, 0.3, 0.2).unwrap().branch(),
            Branch::B
        );
        assert_eq!(
            ModelParams::new(1.0, 0.3, 0.2, 0.2).unwrap().branch(),
            Branch::C
        );
    }

    #[test]
    fn exp_pair_ratio_matches_quotient() {
        let h = h1(&row1()).unwrap();
        for x in [0.01, 0.3, 2.0] {
            assert!((h.ratio(x) - h.value(x) / h.d1(x)).abs() < 1e-14);
        }
        assert!(h.ratio(800.0).is_finite());
    }

    #[test]
    fn f1_at_gamma0_vanishes() {
        assert!(f1(&row1(), 0.28125).abs() < 1e-12);
    }
}

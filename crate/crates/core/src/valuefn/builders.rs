use super::transform::{hbeta, ExpLinearMap, GammaMap};
use super::{Piece, Segment, Solution};
use crate::error::{Error, Result};
use crate::model::{
    alpha, char_roots, f1, gamma_law, h1, h2, h3, theta_roots, Branch, Case, ExpPair, ModelParams,
    Regime, Thresholds,
};
use crate::numerics::{expand_upper, find_root, invert_monotone, Bracket, GammaLaw};
use crate::scalar::{lit, root_tol, to_f64, Real};

/// Value-function factory for one parameter set.
///
/// The regime thresholds are computed once on construction, so sweeps over
/// `gamma` or `b` do not repeat the threshold root searches.
#[derive(Debug, Clone, PartialEq)]
pub struct Solver<T> {
    params: ModelParams<T>,
    thresholds: Thresholds<T>,
}

// Per-gamma quantities shared by the builders.
struct Ctx<T> {
    p: ModelParams<T>,
    gamma: T,
    regime: Regime<T>,
    lambda: T,
    /// `gamma / (gamma + delta)`.
    gd: T,
}

impl<T: Real> Ctx<T> {
    fn dg(&self) -> T {
        self.p.delta + self.gamma
    }

    fn tail(&self, coef: T, anchor: T, b: T, v_b: T) -> Piece<T> {
        Piece::Tail {
            coef,
            lambda: self.lambda,
            anchor,
            slope: self.gd,
            intercept: self.gd * (v_b - b + self.p.eta / self.dg()),
        }
    }

    /// Coefficient of the top exponential above the gamma-law branch.
    fn c32(&self, alpha: T) -> T {
        -self.p.mu / (self.p.sigma * self.p.sigma * alpha * self.lambda * self.lambda)
    }

    /// Constants of the hyperbolic-plus-tail construction at barrier `b`
    /// for the scaled pair `h(. - shift)`: returns `(scale, v(b), c_tail)`.
    fn hyperbolic_fit(&self, h: &ExpPair<T>, y: T) -> (T, T, T) {
        let (dg, lam) = (self.dg(), self.lambda);
        let num = self.gd - lam * self.gamma * self.p.eta / (dg * dg);
        let den = h.d1(y) - lam * self.p.delta * h.value(y) / dg;
        let scale = num / den;
        let v_b = scale * h.value(y);
        let c = (self.p.delta * v_b - self.gamma * self.p.eta / dg) / dg;
        (scale, v_b, c)
    }
}

fn seg<T>(lo: T, hi: T, piece: Piece<T>) -> Segment<T> {
    Segment { lo, hi, piece }
}

fn named<T: Real>(items: &[(&str, T)]) -> Vec<(String, T)> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Smallest `y >= 0` with `h(y)/h'(y) = target`.
fn invert_ratio<T: Real>(h: &ExpPair<T>, target: T) -> Result<T> {
    let f = |y: T| h.ratio(y) - target;
    let br = expand_upper(f, T::zero(), T::one(), lit(1e6))?;
    invert_monotone(|y| h.ratio(y), target, br, root_tol())
}

fn slack<T: Real>(v: T) -> T {
    lit::<T>(1e-12) * v.abs().max(T::one())
}

impl<T: Real> Solver<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        let thresholds = crate::model::thresholds(&params)?;
        Ok(Self { params, thresholds })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn thresholds(&self) -> &Thresholds<T> {
        &self.thresholds
    }

    pub fn classify(&self, gamma: T) -> Result<Regime<T>> {
        self.thresholds.classify(gamma)
    }

    fn ctx(&self, gamma: T) -> Result<Ctx<T>> {
        let regime = self.classify(gamma)?;
        let roots = char_roots(&self.params, gamma)?;
        Ok(Ctx {
            p: self.params,
            gamma,
            regime,
            lambda: roots.lambda_gamma,
            gd: gamma / (gamma + self.params.delta),
        })
    }

    fn need_branch(&self, branch: Branch, what: &str) -> Result<()> {
        if self.params.branch() == branch {
            Ok(())
        } else {
            Err(Error::Regime(format!(
                "{} needs branch {:?}, parameters are in branch {:?}",
                what,
                branch,
                self.params.branch()
            )))
        }
    }

    fn finish(
        &self,
        c: &Ctx<T>,
        form: Case,
        b: T,
        x_switch: T,
        segments: Vec<Segment<T>>,
        constants: Vec<(String, T)>,
    ) -> Solution<T> {
        let mut constants = constants;
        constants.push(("lambda_gamma".into(), c.lambda));
        if let Ok((tm, tp)) = theta_roots(&self.params) {
            constants.push(("theta_plus".into(), tp));
            constants.push(("theta_minus".into(), tm));
        }
        Solution {
            params: self.params,
            gamma: c.gamma,
            regime: c.regime,
            form,
            optimal: false,
            b,
            x_switch,
            segments: segments.into_iter().filter(|s| s.hi > s.lo).collect(),
            constants,
        }
    }

    /// Optimal barrier for `gamma`.
    pub fn optimal_barrier(&self, gamma: T) -> Result<T> {
        let c = self.ctx(gamma)?;
        let p = &self.params;
        match c.regime.case {
            Case::A1 => invert_ratio(&h1(p)?, f1(p, gamma)),
            Case::B1 => Ok(p.x_bar()? + invert_ratio(&h2(p)?, f1(p, gamma))?),
            Case::C1 => Ok(p.x_hat()? + invert_ratio(&h3(p)?, f1(p, gamma))?),
            Case::B2 => Ok(self.b2_optimal(&c)?.2),
            Case::C2 => {
                let law = gamma_law(p, gamma)?;
                let a = alpha(p, gamma);
                Ok(self.c51(&law, a) * law.pdf(T::one()) / p.kappa())
            }
            Case::A2 | Case::B3 => Ok(T::zero()),
        }
    }

    /// Optimal solution for `gamma`.
    pub fn solve(&self, gamma: T) -> Result<Solution<T>> {
        let c = self.ctx(gamma)?;
        let mut sol = match c.regime.case {
            Case::A1 => self.build_a1(gamma, self.optimal_barrier(gamma)?)?,
            Case::A2 => self.build_a2(gamma)?,
            Case::B1 => self.build_b1(gamma, self.optimal_barrier(gamma)?)?,
            Case::B2 => {
                let (m_gamma, _, b) = self.b2_optimal(&c)?;
                self.b2_from(&c, b, T::zero(), m_gamma)?
            }
            Case::B3 => self.build_b3(gamma)?,
            Case::C1 => self.build_c1(gamma, self.optimal_barrier(gamma)?)?,
            Case::C2 => self.build_c2(gamma, self.optimal_barrier(gamma)?)?,
        };
        sol.optimal = true;
        Ok(sol)
    }

    /// Solution for an arbitrary barrier `b >= 0`, using whichever case
    /// builder has `b` in its domain.
    pub fn with_barrier(&self, gamma: T, b: T) -> Result<Solution<T>> {
        let c = self.ctx(gamma)?;
        let p = &self.params;
        if !(b >= T::zero()) {
            return Err(Error::domain(format!(
                "barrier must be nonnegative, got {}",
                b
            )));
        }
        match p.branch() {
            Branch::A if b > T::zero() => self.build_a1(gamma, b),
            Branch::A => self.a2_from(&c),
            Branch::B if b > p.x_bar()? => self.build_b1(gamma, b),
            Branch::B if b == T::zero() && c.regime.case == Case::B3 => self.build_b3(gamma),
            Branch::B if c.regime.case == Case::B2 => self.build_b2(gamma, b),
            Branch::B => Err(Error::domain(format!(
                "barrier {} has no construction in case {}",
                b, c.regime.case
            ))),
            Branch::C if b > p.x_hat()? => self.build_c1(gamma, b),
            Branch::C => self.build_c2(gamma, b),
        }
    }

    /// Full retention, barrier `b > 0`.
    pub fn build_a1(&self, gamma: T, b: T) -> Result<Solution<T>> {
        self.need_branch(Branch::A, "build_a1")?;
        if !(b > T::zero()) {
            return Err(Error::domain(
                "build_a1 needs b > 0; use build_a2 for b = 0",
            ));
        }
        let c = self.ctx(gamma)?;
        let h = h1(&self.params)?;
        let (c11, v_b, c12) = c.hyperbolic_fit(&h, b);
        let segments = vec![
            seg(
                T::zero(),
                b,
                Piece::Hyperbolic {
                    pair: h.scaled(c11),
                    shift: T::zero(),
                },
            ),
            seg(b, T::infinity(), c.tail(c12, b, b, v_b)),
        ];
        Ok(self.finish(
            &c,
            Case::A1,
            b,
            T::zero(),
            segments,
            named(&[("c11", c11), ("c12", c12)]),
        ))
    }

    /// Full retention, every observed surplus paid out.
    pub fn build_a2(&self, gamma: T) -> Result<Solution<T>> {
        self.need_branch(Branch::A, "build_a2")?;
        let c = self.ctx(gamma)?;
        if c.regime.case != Case::A2 {
            return Err(Error::Regime(format!(
                "build_a2 needs gamma <= gamma0, case is {}",
                c.regime.case
            )));
        }
        self.a2_from(&c)
    }

    /// Zero-barrier function of branch A for any `gamma`.
    fn a2_from(&self, c: &Ctx<T>) -> Result<Solution<T>> {
        let gamma = c.gamma;
        let dg = c.dg();
        let coef = -gamma * self.params.eta / (dg * dg);
        let segments = vec![seg(
            T::zero(),
            T::infinity(),
            c.tail(coef, T::zero(), T::zero(), T::zero()),
        )];
        Ok(self.finish(
            c,
            Case::A2,
            T::zero(),
            T::zero(),
            segments,
            named(&[("c_tail", coef)]),
        ))
    }

    /// Retention branch below `x_bar`, hyperbolic up to `b > x_bar`.
    pub fn build_b1(&self, gamma: T, b: T) -> Result<Solution<T>> {
        self.need_branch(Branch::B, "build_b1")?;
        let p = &self.params;
        let x_bar = p.x_bar()?;
        if !(b > x_bar) {
            return Err(Error::domain(format!(
                "build_b1 needs b > x_bar = {}, got {}; use build_b2 or build_b3",
                x_bar, b
            )));
        }
        let c = self.ctx(gamma)?;
        let h = h2(p)?;
        let (scale, v_b, c23) = c.hyperbolic_fit(&h, b - x_bar);
        let k = p.kappa();
        let c22 = p.c22();
        let m = (scale / c22.powf(-T::one() / k)).ln();
        let map = ExpLinearMap::new(p, m, c22.ln() / k - m)?;
        let segments = vec![
            seg(T::zero(), x_bar, Piece::Retention { map }),
            seg(
                x_bar,
                b,
                Piece::Hyperbolic {
                    pair: h.scaled(scale),
                    shift: x_bar,
                },
            ),
            seg(b, T::infinity(), c.tail(c23, b, b, v_b)),
        ];
        Ok(self.finish(
            &c,
            Case::B1,
            b,
            x_bar,
            segments,
            named(&[
                ("M", m),
                ("c21", p.c21()),
                ("c22", c22),
                ("c23", c23),
                ("x_bar", x_bar),
            ]),
        ))
    }

    fn c31(&self, law: &GammaLaw<T>, a: T, beta: T) -> Result<T> {
        let p = &self.params;
        Ok(self.c51(law, a) + p.eta_bar() * (p.mu - p.eta) * hbeta(law, beta, a)?)
    }

    fn c51(&self, law: &GammaLaw<T>, a: T) -> T {
        let p = &self.params;
        p.sigma * p.sigma / (p.mu * a * law.pdf(a))
    }

    fn f6(&self, law: &GammaLaw<T>, a: T, beta: T) -> Result<T> {
        let y = (-beta).exp();
        Ok(y * law.pdf(y) * self.c31(law, a, beta)? / self.params.c21())
    }

    /// `(M_gamma, f6(0), b_gamma)` of the optimal B2 solution.
    fn b2_optimal(&self, c: &Ctx<T>) -> Result<(T, T, T)> {
        let p = &self.params;
        let law = gamma_law(p, c.gamma)?;
        let a = alpha(p, c.gamma);
        let f60 = self.f6(&law, a, T::zero())?;
        let d = p.d();
        let k = p.kappa();
        if !(f60 > k) {
            return Err(Error::numerical(
                to_f64(c.gamma),
                "optimal B2 construction needs f6(0) > 1 + delta eta_bar",
            ));
        }
        let m = ((f60 - T::one()) / d).ln() / k;
        let b = p.c21() * (d / k * ((k * m).exp() - T::one()) + m);
        Ok((m, f60, b))
    }

    /// Retention branch up to `b`, gamma-law branch up to `x_b`, then the
    /// exponential tail; valid for `gamma2 < gamma <= gamma1` and
    /// `0 < b <= b_gamma`.
    pub fn build_b2(&self, gamma: T, b: T) -> Result<Solution<T>> {
        self.need_branch(Branch::B, "build_b2")?;
        let c = self.ctx(gamma)?;
        if c.regime.case != Case::B2 {
            return Err(Error::Regime(format!(
                "build_b2 needs gamma2 < gamma <= gamma1, case is {}",
                c.regime.case
            )));
        }
        let p = &self.params;
        let (m_opt, _, b_opt) = self.b2_optimal(&c)?;
        if !(b > T::zero()) || b > b_opt + slack(b_opt) {
            return Err(Error::domain(format!(
                "build_b2 needs 0 < b <= b_gamma = {}, got {}",
                b_opt, b
            )));
        }
        if (b - b_opt).abs() <= slack(b_opt) {
            return self.b2_from(&c, b_opt, T::zero(), m_opt);
        }
        let d = p.d();
        let k = p.kappa();
        let target = k * (T::one() + b / p.c21());
        // g_bar is increasing in f6, so solve for the f6 level first.
        let lvl = |f: T| f + ((f - T::one()) / d).ln();
        let f_lo = T::one() + T::epsilon();
        let f_star = invert_monotone(lvl, target, Bracket::new(f_lo, target)?, root_tol())?;
        let law = gamma_law(p, gamma)?;
        let a = alpha(p, gamma);
        let mut err = None;
        let mut phi = |beta: T| match self.f6(&law, a, beta) {
            Ok(v) => v - f_star,
            Err(e) => {
                err = Some(e);
                T::nan()
            }
        };
        let br = expand_upper(&mut phi, T::zero(), lit(0.01), lit(700.0));
        let m2 = br.and_then(|br| find_root(&mut phi, br, root_tol()));
        if let Some(e) = err {
            return Err(e);
        }
        let m2 = m2?;
        let m_gamma = ((f_star - T::one()) / d).ln() / k + m2;
        self.b2_from(&c, b, m2, m_gamma)
    }

    fn b2_from(&self, c: &Ctx<T>, b: T, m2: T, m_gamma: T) -> Result<Solution<T>> {
        let p = &self.params;
        let law = gamma_law(p, c.gamma)?;
        let a = alpha(p, c.gamma);
        let k = p.kappa();
        let c21 = p.c21();
        let x1 = ExpLinearMap::new(p, m_gamma, -m2)?;
        let v_b = c21 * m2.exp() * ((k * (m_gamma - m2)).exp() - T::one());
        let lead = self.c31(&law, a, m2)?;
        let x2 = GammaMap::new(law, lead, p.eta_bar() * (p.mu - p.eta), b, -m2, a.ln())?;
        let x_b = x2.x_hi();
        let c32 = c.c32(a);
        let segments = vec![
            seg(T::zero(), b, Piece::Retention { map: x1 }),
            seg(b, x_b, self.gamma_piece(c, x2, b, v_b)),
            seg(x_b, T::infinity(), c.tail(c32, x_b, b, v_b)),
        ];
        Ok(self.finish(
            c,
            Case::B2,
            b,
            x_b,
            segments,
            named(&[
                ("M_gamma", m_gamma),
                ("M2", m2),
                ("alpha_gamma", a),
                ("c31", lead),
                ("c32", c32),
                ("c21", c21),
            ]),
        ))
    }

    fn gamma_piece(&self, c: &Ctx<T>, map: GammaMap<T>, b: T, v_b: T) -> Piece<T> {
        let p = &self.params;
        Piece::GammaBranch {
            map,
            delta: p.delta,
            gamma: c.gamma,
            eta_bar: p.eta_bar(),
            excess: p.mu - p.eta,
            barrier: b,
            v_barrier: v_b,
        }
    }

    /// Zero barrier with reinsurance below `x0`; valid for `gamma <= gamma2`.
    pub fn build_b3(&self, gamma: T) -> Result<Solution<T>> {
        self.need_branch(Branch::B, "build_b3")?;
        let c = self.ctx(gamma)?;
        if c.regime.case != Case::B3 {
            return Err(Error::Regime(format!(
                "build_b3 needs gamma <= gamma2, case is {}",
                c.regime.case
            )));
        }
        let p = &self.params;
        let law = gamma_law(p, gamma)?;
        let a = alpha(p, gamma);
        let ex = p.mu - p.eta;
        let rhs0 = p.mu / (lit::<T>(2.0) * a * law.pdf(a));
        let mut err = None;
        let mut eq = |m: T| {
            let y = m.exp();
            match hbeta(&law, -m, a) {
                Ok(h) => ex / (y * law.pdf(y)) - rhs0 - ex * h,
                Err(e) => {
                    err = Some(e);
                    T::nan()
                }
            }
        };
        let m = if eq(T::zero()) <= T::zero() {
            T::zero()
        } else {
            find_root(&mut eq, Bracket::new(T::zero(), a.ln())?, root_tol())?
        };
        if let Some(e) = err {
            return Err(e);
        }
        let em = m.exp();
        let c33 = p.eta_bar() * ex / (em * law.pdf(em));
        let x2 = GammaMap::new(law, c33, p.eta_bar() * ex, T::zero(), m, a.ln())?;
        let x0 = x2.x_hi();
        let c32 = c.c32(a);
        let segments = vec![
            seg(
                T::zero(),
                x0,
                self.gamma_piece(&c, x2, T::zero(), T::zero()),
            ),
            seg(x0, T::infinity(), c.tail(c32, x0, T::zero(), T::zero())),
        ];
        Ok(self.finish(
            &c,
            Case::B3,
            T::zero(),
            x0,
            segments,
            named(&[
                ("M_gamma", m),
                ("alpha_gamma", a),
                ("c33", c33),
                ("c32", c32),
            ]),
        ))
    }

    /// Cheap reinsurance: power branch below `x_hat`, hyperbolic up to
    /// `b > x_hat`.
    pub fn build_c1(&self, gamma: T, b: T) -> Result<Solution<T>> {
        self.need_branch(Branch::C, "build_c1")?;
        let p = &self.params;
        let x_hat = p.x_hat()?;
        if !(b > x_hat) {
            return Err(Error::domain(format!(
                "build_c1 needs b > x_hat = {}, got {}; use build_c2",
                x_hat, b
            )));
        }
        let c = self.ctx(gamma)?;
        let h = h3(p)?;
        let (c41, v_b, c42) = c.hyperbolic_fit(&h, b - x_hat);
        let segments = vec![
            seg(
                T::zero(),
                x_hat,
                Piece::Power {
                    coef: c41,
                    exponent: p.power(),
                },
            ),
            seg(
                x_hat,
                b,
                Piece::Hyperbolic {
                    pair: h.scaled(c41),
                    shift: x_hat,
                },
            ),
            seg(b, T::infinity(), c.tail(c42, b, b, v_b)),
        ];
        Ok(self.finish(
            &c,
            Case::C1,
            b,
            x_hat,
            segments,
            named(&[("c41", c41), ("c42", c42), ("x_hat", x_hat)]),
        ))
    }

    /// Cheap reinsurance with a barrier below the gamma-law branch; valid for
    /// `0 < b <= c51 g(1) / (1 + delta eta_bar)` provided the branch is
    /// nonempty.
    pub fn build_c2(&self, gamma: T, b: T) -> Result<Solution<T>> {
        self.need_branch(Branch::C, "build_c2")?;
        let c = self.ctx(gamma)?;
        let p = &self.params;
        let law = gamma_law(p, gamma)?;
        let a = alpha(p, gamma);
        let c51 = self.c51(&law, a);
        let k = p.kappa();
        let b_max = c51 * law.pdf(T::one()) / k;
        // An optimal barrier that underflows is represented by b = 0.
        let underflow = b == T::zero() && b_max == T::zero();
        if !(b > T::zero() || underflow) || b > b_max + slack(b_max) {
            return Err(Error::domain(format!(
                "build_c2 needs 0 < b <= {}, got {}",
                b_max, b
            )));
        }
        let m2 = if underflow || (b - b_max).abs() <= slack(b_max) {
            T::zero()
        } else {
            // ln(y g(y)) at y = e^{-beta} decreases in beta.
            let target = (b * k / c51).ln();
            let f = |beta: T| {
                let y = (-beta).exp();
                -beta + law.ln_pdf(y)
            };
            let br = expand_upper(|beta| f(beta) - target, T::zero(), T::one(), lit(700.0))?;
            invert_monotone(f, target, br, root_tol())?
        };
        if !((-m2) < a.ln()) {
            return Err(Error::domain(format!(
                "build_c2: barrier {} leaves no gamma-law branch (alpha = {})",
                b, a
            )));
        }
        let d = p.d();
        let coef = k * m2.exp() * b.powf(T::one() / k) / d;
        let v_b = coef * b.powf(p.power());
        let x2 = GammaMap::new(law, c51, T::zero(), b, -m2, a.ln())?;
        let x_b = x2.x_hi();
        let c32 = c.c32(a);
        let segments = vec![
            seg(
                T::zero(),
                b,
                Piece::Power {
                    coef,
                    exponent: p.power(),
                },
            ),
            seg(b, x_b, self.gamma_piece(&c, x2, b, v_b)),
            seg(x_b, T::infinity(), c.tail(c32, x_b, b, v_b)),
        ];
        Ok(self.finish(
            &c,
            Case::C2,
            b,
            x_b,
            segments,
            named(&[("M2", m2), ("alpha_gamma", a), ("c51", c51), ("c32", c32)]),
        ))
    }

    /// The `gamma -> infinity` limit: continuous payments at `b_inf`.
    pub fn asymptotic(&self) -> Result<Solution<T>> {
        let p = &self.params;
        let (tm, tp) = theta_roots(p)?;
        let (h, shift) = match p.branch() {
            Branch::A => (h1(p)?, T::zero()),
            Branch::B => (h2(p)?, p.x_bar()?),
            Branch::C => (h3(p)?, p.x_hat()?),
        };
        let y = ((-h.q / h.p) * (p.delta - p.eta * tm) / (p.delta - p.eta * tp)).ln() / (tp - tm);
        let b_inf = shift + y;
        let scale = T::one() / h.d1(y);
        let v_b = scale * h.value(y);
        let top = Piece::Tail {
            coef: T::zero(),
            lambda: -T::one(),
            anchor: b_inf,
            slope: T::one(),
            intercept: v_b - b_inf,
        };
        let hyper = Piece::Hyperbolic {
            pair: h.scaled(scale),
            shift,
        };
        let (segments, mut constants) = match p.branch() {
            Branch::A => (
                vec![seg(T::zero(), b_inf, hyper), seg(b_inf, T::infinity(), top)],
                vec![],
            ),
            Branch::B => {
                let k = p.kappa();
                let c22 = p.c22();
                let m = (c22.powf(T::one() / k) * scale).ln();
                let map = ExpLinearMap::new(p, m, c22.ln() / k - m)?;
                (
                    vec![
                        seg(T::zero(), shift, Piece::Retention { map }),
                        seg(shift, b_inf, hyper),
                        seg(b_inf, T::infinity(), top),
                    ],
                    named(&[("M_inf", m), ("x_bar", shift)]),
                )
            }
            Branch::C => (
                vec![
                    seg(
                        T::zero(),
                        shift,
                        Piece::Power {
                            coef: scale,
                            exponent: p.power(),
                        },
                    ),
                    seg(shift, b_inf, hyper),
                    seg(b_inf, T::infinity(), top),
                ],
                named(&[("x_hat", shift)]),
            ),
        };
        constants.push(("theta_plus".into(), tp));
        constants.push(("theta_minus".into(), tm));
        let case = match p.branch() {
            Branch::A => Case::A1,
            Branch::B => Case::B1,
            Branch::C => Case::C1,
        };
        Ok(Solution {
            params: *p,
            gamma: T::infinity(),
            regime: Regime {
                case,
                thresholds: self.thresholds,
            },
            form: case,
            optimal: true,
            b: b_inf,
            x_switch: shift,
            segments,
            constants,
        })
    }
}

//! The two changes of variable that parametrise the reinsurance branches.
//!
//! On the retention branch the value function is written as a function of
//! `z = -ln v'(x)`, and `x = x1(z)` is an explicit exponential-linear map.
//! On the gamma-law branch `x = x2(z)` involves the integrals `H` and
//! `fbar` of the gamma density and is tabulated on a node grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{integrate_n, newton_increasing, GammaLaw};
use crate::scalar::{lit, quad_tol, root_tol, to_f64, Real};

/// Nodes of the cumulative quadrature table behind `x2`.
pub const TABLE_NODES: usize = 512;

fn outside<T: Real>(x: T, lo: T, hi: T) -> Error {
    Error::Range {
        target: to_f64(x),
        lo: to_f64(lo),
        hi: to_f64(hi),
    }
}

// Values a hair outside the image (round-off at a breakpoint) snap to the
// nearest end.
fn snap<T: Real>(x: T, lo: T, hi: T) -> Option<T> {
    let slack = lit::<T>(1e-9) * (T::one() + x.abs());
    if x < lo - slack || x > hi + slack {
        None
    } else {
        Some(x.max(lo).min(hi))
    }
}

/// `x1(z) = k21 e^{kappa (z + m)} + c21 z + k22` on `[-m, z_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpLinearMap<T> {
    pub k21: T,
    pub c21: T,
    pub k22: T,
    pub kappa: T,
    pub m: T,
    pub z_lo: T,
    pub z_hi: T,
}

impl<T: Real> ExpLinearMap<T> {
    pub fn new(p: &ModelParams<T>, m: T, z_hi: T) -> Result<Self> {
        let c21 = p.c21();
        let kappa = p.kappa();
        let d = p.d();
        if !(z_hi > -m) {
            return Err(Error::domain(format!(
                "empty retention domain [{}, {}]",
                -m, z_hi
            )));
        }
        Ok(Self {
            k21: d * c21 / kappa,
            c21,
            k22: c21 * (m - d / kappa),
            kappa,
            m,
            z_lo: -m,
            z_hi,
        })
    }

    pub fn forward(&self, z: T) -> T {
        self.k21 * (self.kappa * (z + self.m)).exp() + self.c21 * z + self.k22
    }

    pub fn derivative(&self, z: T) -> T {
        self.kappa * self.k21 * (self.kappa * (z + self.m)).exp() + self.c21
    }

    pub fn inverse(&self, x: T) -> Result<T> {
        let lo = self.forward(self.z_lo);
        let hi = self.forward(self.z_hi);
        let x = snap(x, lo, hi).ok_or_else(|| outside(x, lo, hi))?;
        if x == hi {
            return Ok(self.z_hi);
        }
        if x == lo {
            return Ok(self.z_lo);
        }
        // Convex and increasing: Newton from the right end never overshoots.
        newton_increasing(
            |z| Ok((self.forward(z), self.derivative(z))),
            x,
            self.z_lo,
            self.z_hi,
            self.z_hi,
            root_tol(),
        )
    }

    /// `v = c21 e^{-z} (e^{kappa (m + z)} - 1)`.
    pub fn value(&self, z: T) -> T {
        self.c21 * (-z).exp() * ((self.kappa * (self.m + z)).exp() - T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node<T> {
    z: T,
    h: T,
    j: T,
}

/// `x2(z) = fbar(e^z) + offset` on `[z_lo, z_hi]`, where
/// `fbar(y) = lead [G(y) - G(a)] - coef [G(y) H(y) - J(y)]`,
/// `H(y) = int_a^y dt / (t^2 g(t))` and `J(y) = int_a^y G(t) / (t^2 g(t)) dt`
/// with `a = e^{z_lo}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaMap<T> {
    pub law: GammaLaw<T>,
    pub lead: T,
    pub coef: T,
    pub offset: T,
    pub z_lo: T,
    pub z_hi: T,
    #[serde(skip)]
    g_lo: T,
    #[serde(skip)]
    nodes: Vec<Node<T>>,
    #[serde(skip)]
    x_nodes: Vec<T>,
}

// Integrands of H and J in the log variable t = ln y.
fn hj_integrand<T: Real>(law: &GammaLaw<T>, t: T) -> [T; 2] {
    let y = t.exp();
    let w = (-t - law.ln_pdf(y)).exp();
    [w, law.cdf(y) * w]
}

impl<T: Real> GammaMap<T> {
    pub fn new(law: GammaLaw<T>, lead: T, coef: T, offset: T, z_lo: T, z_hi: T) -> Result<Self> {
        if !(z_hi >= z_lo) {
            return Err(Error::domain(format!(
                "empty gamma-law domain [{}, {}]",
                z_lo, z_hi
            )));
        }
        let n = if z_hi > z_lo { TABLE_NODES } else { 1 };
        // With coef = 0 the map only involves G, and H, J (which can exceed
        // the floating range) are never needed.
        let skip = coef == T::zero();
        let mut nodes = Vec::with_capacity(n);
        nodes.push(Node {
            z: z_lo,
            h: T::zero(),
            j: T::zero(),
        });
        let step = (z_hi - z_lo) / lit((n.max(2) - 1) as f64);
        for k in 1..n {
            let prev = nodes[k - 1];
            let z = if k == n - 1 {
                z_hi
            } else {
                z_lo + step * lit(k as f64)
            };
            let [dh, dj] = if skip {
                [T::zero(); 2]
            } else {
                integrate_n(|t| hj_integrand(&law, t), prev.z, z, quad_tol())?
            };
            nodes.push(Node {
                z,
                h: prev.h + dh,
                j: prev.j + dj,
            });
        }
        let mut map = Self {
            law,
            lead,
            coef,
            offset,
            z_lo,
            z_hi,
            g_lo: law.cdf(z_lo.exp()),
            nodes,
            x_nodes: Vec::new(),
        };
        map.x_nodes = map
            .nodes
            .iter()
            .map(|nd| map.x_from(nd.z, nd.h, nd.j))
            .collect();
        Ok(map)
    }

    fn x_from(&self, z: T, h: T, j: T) -> T {
        let g = self.law.cdf(z.exp());
        self.offset + self.lead * (g - self.g_lo) - self.coef * (g * h - j)
    }

    /// `(H, J)` at `y = e^z` from the nearest node below plus a local
    /// quadrature.
    pub fn hj(&self, z: T) -> Result<(T, T)> {
        if !(z >= self.z_lo && z <= self.z_hi) {
            return Err(outside(z, self.z_lo, self.z_hi));
        }
        if self.coef == T::zero() {
            return Ok((T::zero(), T::zero()));
        }
        let k = self.nodes.partition_point(|nd| nd.z <= z).max(1) - 1;
        let nd = self.nodes[k];
        if nd.z == z {
            return Ok((nd.h, nd.j));
        }
        let [dh, dj] = integrate_n(|t| hj_integrand(&self.law, t), nd.z, z, quad_tol())?;
        Ok((nd.h + dh, nd.j + dj))
    }

    /// `H(e^z)`.
    pub fn h(&self, z: T) -> Result<T> {
        self.hj(z).map(|v| v.0)
    }

    /// `(x2(z), x2'(z), H(e^z))`.
    pub fn state(&self, z: T) -> Result<(T, T, T)> {
        let (h, j) = self.hj(z)?;
        let x = self.x_from(z, h, j);
        let y = z.exp();
        let d = y * self.law.pdf(y) * (self.lead - self.coef * h);
        Ok((x, d, h))
    }

    pub fn forward(&self, z: T) -> Result<T> {
        self.state(z).map(|s| s.0)
    }

    pub fn derivative(&self, z: T) -> Result<T> {
        self.state(z).map(|s| s.1)
    }

    pub fn x_lo(&self) -> T {
        self.x_nodes[0]
    }

    pub fn x_hi(&self) -> T {
        *self.x_nodes.last().expect("table has nodes")
    }

    pub fn inverse(&self, x: T) -> Result<T> {
        let (lo, hi) = (self.x_lo(), self.x_hi());
        let x = snap(x, lo, hi).ok_or_else(|| outside(x, lo, hi))?;
        if x == lo {
            return Ok(self.z_lo);
        }
        if x == hi {
            return Ok(self.z_hi);
        }
        let k = self
            .x_nodes
            .partition_point(|v| *v <= x)
            .clamp(1, self.nodes.len() - 1);
        let (za, zb) = (self.nodes[k - 1].z, self.nodes[k].z);
        let (xa, xb) = (self.x_nodes[k - 1], self.x_nodes[k]);
        let guess = if xb > xa {
            za + (zb - za) * (x - xa) / (xb - xa)
        } else {
            za
        };
        newton_increasing(
            |z| self.state(z).map(|s| (s.0, s.1)),
            x,
            za,
            zb,
            guess,
            root_tol(),
        )
    }
}

/// `H_beta(z) = int_{e^{-beta}}^z dy / (y^2 g(y))`, by direct quadrature.
pub fn hbeta<T: Real>(law: &GammaLaw<T>, beta: T, z: T) -> Result<T> {
    let a = (-beta).exp();
    if !(z >= a * (T::one() - lit::<T>(8.0) * T::epsilon())) {
        return Err(Error::domain(format!(
            "H needs z >= e^(-beta) = {}, got {}",
            a, z
        )));
    }
    integrate_n(
        |t| [hj_integrand(law, t)[0]],
        -beta,
        z.ln().max(-beta),
        quad_tol(),
    )
    .map(|v| v[0])
}

/// `fbar_beta(z)` by direct quadrature; `coef` is `eta_bar (mu - eta)`.
pub fn fbar<T: Real>(law: &GammaLaw<T>, beta: T, lead: T, coef: T, z: T) -> Result<T> {
    let a = (-beta).exp();
    if !(z >= a * (T::one() - lit::<T>(8.0) * T::epsilon())) {
        return Err(Error::domain(format!(
            "fbar needs z >= e^(-beta) = {}, got {}",
            a, z
        )));
    }
    let [h, j] = integrate_n(
        |t| hj_integrand(law, t),
        -beta,
        z.ln().max(-beta),
        quad_tol(),
    )?;
    let g = law.cdf(z);
    Ok(lead * (g - law.cdf(a)) - coef * (g * h - j))
}

/// One of the two transforms together with its domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform<'a, T> {
    X1(&'a ExpLinearMap<T>),
    X2(&'a GammaMap<T>),
}

impl<T: Real> Transform<'_, T> {
    pub fn domain(&self) -> (T, T) {
        match self {
            Transform::X1(m) => (m.z_lo, m.z_hi),
            Transform::X2(m) => (m.z_lo, m.z_hi),
        }
    }

    pub fn forward(&self, z: T) -> Result<T> {
        match self {
            Transform::X1(m) => Ok(m.forward(z)),
            Transform::X2(m) => m.forward(z),
        }
    }

    pub fn derivative(&self, z: T) -> Result<T> {
        match self {
            Transform::X1(m) => Ok(m.derivative(z)),
            Transform::X2(m) => m.derivative(z),
        }
    }

    pub fn inverse(&self, x: T) -> Result<T> {
        match self {
            Transform::X1(m) => m.inverse(x),
            Transform::X2(m) => m.inverse(x),
        }
    }
}

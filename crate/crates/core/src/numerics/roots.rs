use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const MAX_ITER: usize = 300;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Bracket<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::domain(format!(
                "bracket needs lo < hi, got [{}, {}]",
                lo, hi
            )))
        }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Real roots of `a2 r^2 + a1 r + a0`, sorted ascending.
///
/// Uses the cancellation-free form `q = -(a1 + sign(a1) sqrt(disc)) / 2`.
pub fn quadratic_roots<T: Real>(a2: T, a1: T, a0: T) -> Result<(T, T)> {
    if !(a2 > T::zero()) {
        return Err(Error::domain("leading coefficient must be positive"));
    }
    let disc = a1 * a1 - lit::<T>(4.0) * a2 * a0;
    if !(disc > T::zero()) {
        return Err(Error::domain(format!("non-positive discriminant {}", disc)));
    }
    let sq = disc.sqrt();
    let half = lit::<T>(0.5);
    let q = if a1 >= T::zero() {
        -(a1 + sq) * half
    } else {
        (sq - a1) * half
    };
    let r1 = q / a2;
    let r2 = a0 / q;
    Ok(if r1 < r2 { (r1, r2) } else { (r2, r1) })
}

fn check_finite<T: Real>(x: T, fx: T) -> Result<T> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::numerical(to_f64(x), "non-finite function value"))
    }
}

/// Brent's method on a sign-changing bracket.
///
/// Terminates when the enclosing interval is narrower than `tol` (plus a few
/// ulps of the iterate) or an exact zero is hit. The result always lies in
/// the bracket.
pub fn find_root<T, F>(mut f: F, bracket: Bracket<T>, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let half = lit::<T>(0.5);
    let mut a = bracket.lo;
    let mut b = bracket.hi;
    let mut fa = check_finite(a, f(a))?;
    let mut fb = check_finite(b, f(b))?;
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo: to_f64(a),
            hi: to_f64(b),
        });
    }
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + half * tol;
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else {
            b + tol1.abs() * xm.signum()
        };
        fb = check_finite(b, f(b))?;
    }
    Err(Error::numerical(to_f64(b), "root finder did not converge"))
}

/// Solves `f(x) = target` for `f` strictly monotone on the bracket.
pub fn invert_monotone<T, F>(mut f: F, target: T, bracket: Bracket<T>, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let flo = check_finite(bracket.lo, f(bracket.lo))?;
    let fhi = check_finite(bracket.hi, f(bracket.hi))?;
    let (lo, hi) = if flo <= fhi { (flo, fhi) } else { (fhi, flo) };
    if !(target >= lo && target <= hi) {
        return Err(Error::Range {
            target: to_f64(target),
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    if target == flo {
        return Ok(bracket.lo);
    }
    if target == fhi {
        return Ok(bracket.hi);
    }
    find_root(|x| f(x) - target, bracket, tol)
}

/// Doubles `hi` (starting from `hi0`) until `f(lo)` and `f(hi)` differ in
/// sign, giving up once `hi` exceeds `cap`.
pub fn expand_upper<T, F>(mut f: F, lo: T, hi0: T, cap: T) -> Result<Bracket<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let flo = check_finite(lo, f(lo))?;
    let mut hi = hi0;
    loop {
        let fhi = f(hi);
        if fhi.is_finite() && (flo == T::zero() || fhi == T::zero() || fhi.signum() != flo.signum())
        {
            return Bracket::new(lo, hi);
        }
        if hi > cap {
            return Err(Error::Bracket {
                lo: to_f64(lo),
                hi: to_f64(hi),
            });
        }
        hi = hi * lit(2.0);
    }
}

/// Safeguarded Newton iteration for `f(z) = target` with `f` increasing on
/// `[lo, hi]`.
///
/// A Newton step that leaves the current bracket is replaced by bisection,
/// so the iteration converges whenever the target is attained on the
/// interval. `start` seeds the iteration.
pub fn newton_increasing<T, F>(mut f: F, target: T, lo: T, hi: T, start: T, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    let half = lit::<T>(0.5);
    let mut a = lo;
    let mut b = hi;
    let mut z = start.max(lo).min(hi);
    for _ in 0..MAX_ITER {
        let (fz, dz) = f(z)?;
        let r = fz - target;
        if r == T::zero() {
            return Ok(z);
        }
        if r > T::zero() {
            b = z;
        } else {
            a = z;
        }
        let mut next = if dz > T::zero() { z - r / dz } else { T::nan() };
        if !(next > a && next < b) {
            next = half * (a + b);
        }
        let step = (next - z).abs();
        z = next;
        if step <= tol * (T::one() + z.abs()) || (b - a) <= tol * (T::one() + z.abs()) {
            return Ok(z);
        }
    }
    Err(Error::numerical(
        to_f64(z),
        "Newton inversion did not converge",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_symmetric() {
        let (a, b) = quadratic_roots(1.0, 0.0, -1.0).unwrap();
        assert_eq!((a, b), (-1.0, 1.0));
    }

    #[test]
    fn quadratic_rejects_complex() {
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_err());
        assert!(quadratic_roots(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn brent_sqrt_two() {
        let r = find_root(|x: f64| x * x - 2.0, Bracket::new(1.0, 2.0).unwrap(), 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn brent_identity_and_no_sign_change() {
        let r = find_root(|x: f64| x, Bracket::new(-1.0, 1.0).unwrap(), 1e-12).unwrap();
        assert!(r.abs() < 1e-12);
        let e = find_root(
            |x: f64| x * x + 1.0,
            Bracket::new(-1.0, 1.0).unwrap(),
            1e-12,
        );
        assert!(matches!(e, Err(Error::Bracket { .. })));
    }

    #[test]
    fn inversion_of_exp() {
        let x = invert_monotone(
            f64::exp,
            std::f64::consts::E,
            Bracket::new(0.0, 3.0).unwrap(),
            1e-12,
        )
        .unwrap();
        assert!((x - 1.0).abs() < 1e-12);
        let e = invert_monotone(f64::exp, 100.0, Bracket::new(0.0, 3.0).unwrap(), 1e-12);
        assert!(matches!(e, Err(Error::Range { .. })));
    }

    #[test]
    fn expansion_finds_sign_change() {
        let br = expand_upper(|x: f64| x - 37.0, 1e-8, 1.0, 1e6).unwrap();
        assert!(br.hi >= 37.0 && br.hi <= 74.0);
        assert!(expand_upper(|x: f64| x + 1.0, 1e-8, 1.0, 1e6).is_err());
    }

    #[test]
    fn newton_cube_root() {
        let z = newton_increasing(
            |z: f64| Ok((z * z * z, 3.0 * z * z)),
            5.0,
            0.0,
            3.0,
            3.0,
            1e-14,
        )
        .unwrap();
        assert!((z - 5f64.cbrt()).abs() < 1e-12);
    }
}

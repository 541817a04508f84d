use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

// 15-point Kronrod abscissae on [0, 1] (the rule is symmetric); the odd
// indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

#[derive(Clone, Copy)]
struct Panel<T, const N: usize> {
    a: T,
    b: T,
    value: [T; N],
    error: [T; N],
}

fn gk15<T, F, const N: usize>(f: &mut F, a: T, b: T) -> Result<Panel<T, N>>
where
    T: Real,
    F: FnMut(T) -> [T; N],
{
    let half = lit::<T>(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let mut fv = [[T::zero(); N]; 15];
    for (i, x) in XGK.iter().enumerate() {
        let dx = half_len * lit(*x);
        let (lo, hi) = (center - dx, center + dx);
        fv[2 * i] = f(lo);
        if i < 7 {
            fv[2 * i + 1] = f(hi);
        }
        if fv[2 * i].iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(to_f64(lo), "non-finite integrand"));
        }
        if i < 7 && fv[2 * i + 1].iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(to_f64(hi), "non-finite integrand"));
        }
    }
    let mut value = [T::zero(); N];
    let mut error = [T::zero(); N];
    for k in 0..N {
        let mut kron = T::zero();
        let mut gauss = T::zero();
        for i in 0..8 {
            let s = if i < 7 {
                fv[2 * i][k] + fv[2 * i + 1][k]
            } else {
                fv[14][k]
            };
            kron = kron + lit::<T>(WGK[i]) * s;
            if i % 2 == 1 {
                gauss = gauss + lit::<T>(WG[i / 2]) * s;
            }
        }
        let mean = kron * half;
        let mut asc = T::zero();
        for i in 0..8 {
            let dev = if i < 7 {
                (fv[2 * i][k] - mean).abs() + (fv[2 * i + 1][k] - mean).abs()
            } else {
                (fv[14][k] - mean).abs()
            };
            asc = asc + lit::<T>(WGK[i]) * dev;
        }
        let asc = asc * half_len.abs();
        let kron = kron * half_len;
        let gauss = gauss * half_len;
        // QUADPACK's rescaling of |K - G|, which is very pessimistic for
        // smooth integrands on its own.
        let mut err = (kron - gauss).abs();
        if asc > T::zero() && err > T::zero() {
            let r = (lit::<T>(200.0) * err / asc).powf(lit(1.5));
            err = asc * r.min(T::one());
        }
        value[k] = kron;
        error[k] = err;
    }
    Ok(Panel { a, b, value, error })
}

/// Adaptive Gauss-Kronrod quadrature of a vector-valued integrand.
///
/// All components share the same abscissae, so several integrals over one
/// interval cost a single set of evaluations. Every component is held to
/// `rel_tol` relative accuracy (with a round-off floor).
pub fn integrate_n<T, F, const N: usize>(mut f: F, a: T, b: T, rel_tol: T) -> Result<[T; N]>
where
    T: Real,
    F: FnMut(T) -> [T; N],
{
    if a == b {
        return Ok([T::zero(); N]);
    }
    if !(a < b) {
        return Err(Error::domain(format!(
            "integration limits reversed: [{}, {}]",
            a, b
        )));
    }
    let floor = lit::<T>(50.0) * T::epsilon();
    let mut panels = vec![gk15(&mut f, a, b)?];
    loop {
        let mut total = [T::zero(); N];
        let mut err = [T::zero(); N];
        for p in &panels {
            for k in 0..N {
                total[k] = total[k] + p.value[k];
                err[k] = err[k] + p.error[k];
            }
        }
        let done = (0..N).all(|k| err[k] <= rel_tol.max(floor) * total[k].abs());
        if done || err.iter().all(|e| *e == T::zero()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::numerical(
                to_f64(a),
                "quadrature panel limit reached",
            ));
        }
        // Split the panel contributing most to the worst component.
        let scale: [T; N] = std::array::from_fn(|k| total[k].abs().max(T::min_positive_value()));
        let worst = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let w = (0..N)
                    .map(|k| p.error[k] / scale[k])
                    .fold(T::zero(), |m, v| m.max(v));
                (i, w)
            })
            .fold((0, T::neg_infinity()), |m, v| if v.1 > m.1 { v } else { m })
            .0;
        let p = panels.swap_remove(worst);
        let mid = lit::<T>(0.5) * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval exhausted at machine resolution; accept what we have.
            panels.push(p);
            let mut total = [T::zero(); N];
            for p in &panels {
                for (t, v) in total.iter_mut().zip(p.value) {
                    *t = *t + v;
                }
            }
            return Ok(total);
        }
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
    }
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, rel_tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate_n(|x| [f(x)], a, b, rel_tol).map(|v| v[0])
}

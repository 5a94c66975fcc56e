//! Coherent states on the sphere, the reproducing kernels of both spaces,
//! coherent-state inner products with their small-hbar expansions, and the
//! auxiliary g-function of the p = -1 analysis.

use crate::hilbert::{BasisSide, CoeffVector, Model, ModelParams};
use crate::specfun::{
    bessel_i, bessel_i_asymptotic, hyp0f1, hyp2f1_geom, log_gamma, principal_powf, principal_sqrt,
    EvalResult,
};
use crate::util::pairwise_sum;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which evaluation route produced a kernel value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelRoute {
    Series,
    BesselClosedForm,
    Asymptotic,
}

#[derive(Clone, Copy, Debug)]
pub struct KernelValue {
    pub value: Complex64,
    pub route: KernelRoute,
    pub est_abs_error: f64,
}

/// Hermitian pairing z.w = sum z_j conj(w_j).
pub fn dot(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Asymptotic region guard: expansions in this module are evaluated only
/// for |Arg(z.w)| <= pi - 0.1; closer to the cut the series route is forced.
pub const ASYMPTOTIC_ARG_MARGIN: f64 = 0.1;

/// Coherent state K(x, z) = sum_l (c_{l,p}/l!) (x.z/hbar)^l for unit x.
///
/// Truncation stops once |term| < tol * |partial sum| holds for three
/// consecutive terms; for p = 0 the weights collapse and the sum is
/// exp(x.z/hbar).
pub fn coherent_eval(
    x: &[Complex64],
    z: &[Complex64],
    params: &ModelParams,
    tol: f64,
) -> Result<KernelValue> {
    if (norm(x) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "coherent_eval requires |x| = 1, got {}",
            norm(x)
        )));
    }
    let u = dot(x, z) / params.hbar;
    if params.p == 0.0 {
        return Ok(KernelValue {
            value: u.exp(),
            route: KernelRoute::Series,
            est_abs_error: u.exp().norm() * f64::EPSILON * 4.0,
        });
    }
    let n = params.n as f64;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small_streak = 0;
    let mut max_term = 1.0f64;
    let mut last = 0.0;
    for l in 0..2000u32 {
        let lf = l as f64;
        // c_{l+1,p}/c_{l,p} = sqrt((n+l)/(n+p+l)); term also gains u/(l+1).
        let cr = ((n + lf) / (n + params.p + lf)).sqrt();
        term = term * u * cr / (lf + 1.0);
        sum += term;
        max_term = max_term.max(term.norm());
        last = term.norm();
        if term.norm() < tol * sum.norm().max(1e-300) {
            small_streak += 1;
            if small_streak >= 3 {
                break;
            }
        } else {
            small_streak = 0;
        }
    }
    Ok(KernelValue {
        value: sum,
        route: KernelRoute::Series,
        est_abs_error: last + max_term * f64::EPSILON * 8.0,
    })
}

/// Coefficients of K(., z) in the sphere basis: a_k(z) = conj(Phi_{k,p}(z)),
/// truncated at the model degree.
pub fn coherent_coeffs(model: &Model, z: &[Complex64]) -> CoeffVector {
    let coeffs = model
        .cap_phi_values(z)
        .into_iter()
        .map(|v| v.conj())
        .collect();
    CoeffVector {
        params: model.params,
        side: BasisSide::Sphere,
        coeffs,
    }
}

/// Tail bound of the coherent coefficient expansion beyond the model degree:
/// sum of |c_{l,p}| |x.z/hbar|^l / l! over l > l_max, bounded geometrically.
pub fn coherent_tail_bound(params: &ModelParams, z_norm: f64) -> f64 {
    let n = params.n as f64;
    let u = z_norm / params.hbar;
    let l0 = params.l_max as f64 + 1.0;
    // |term_{l0}| in the log domain
    let mut ln_c = 0.0;
    for l in 0..(params.l_max as i64 + 1) {
        ln_c += 0.5 * ((n + l as f64).ln() - (n + params.p + l as f64).ln());
    }
    let ln_term = ln_c + l0 * u.ln() - crate::specfun::ln_factorial(params.l_max + 1);
    let ratio = u / (l0 + 1.0) * ((n + l0) / (n + params.p + l0)).sqrt().max(1.0);
    if ratio >= 0.9 {
        return f64::INFINITY;
    }
    ln_term.exp() / (1.0 - ratio)
}

/// Reproducing kernel T_{n,p}(z, w) of the entire-function space by either
/// route: the degree series sum_l (z.w/h^2)^l / (l! (n+p)_l) or the closed
/// form Gamma(n+p) (z.w/h^2)^((1-p-n)/2) I_{n+p-1}(2 sqrt(z.w)/h).
pub fn kernel_t(
    z: &[Complex64],
    w: &[Complex64],
    params: &ModelParams,
    route: KernelRoute,
) -> Result<KernelValue> {
    let zeta = dot(z, w) / (params.hbar * params.hbar);
    kernel_t_from_zeta(zeta, params, route)
}

/// Same kernel through the reduced variable zeta = z.w / hbar^2.
pub fn kernel_t_from_zeta(
    zeta: Complex64,
    params: &ModelParams,
    route: KernelRoute,
) -> Result<KernelValue> {
    let b = params.n as f64 + params.p;
    match route {
        KernelRoute::Series => {
            let r = hyp0f1(b, zeta)?;
            Ok(KernelValue {
                value: r.value,
                route,
                est_abs_error: r.est_abs_error,
            })
        }
        KernelRoute::BesselClosedForm | KernelRoute::Asymptotic => {
            if zeta.norm() == 0.0 {
                return Ok(KernelValue {
                    value: Complex64::new(1.0, 0.0),
                    route,
                    est_abs_error: 0.0,
                });
            }
            let omega = 2.0 * principal_sqrt(zeta);
            let bessel = if route == KernelRoute::Asymptotic {
                bessel_i_asymptotic(b - 1.0, omega)?
            } else {
                bessel_i(b - 1.0, omega)?
            };
            let pref = log_gamma(b)?.exp() * principal_powf(zeta, 0.5 * (1.0 - b));
            Ok(KernelValue {
                value: pref * bessel.value,
                route,
                est_abs_error: pref.norm() * bessel.est_abs_error,
            })
        }
    }
}

/// <K(., z), K(., w)>_{S^n} = T_{n,p}(w, z), evaluated by the series route.
pub fn coherent_inner(
    z: &[Complex64],
    w: &[Complex64],
    params: &ModelParams,
) -> Result<KernelValue> {
    kernel_t(w, z, params, KernelRoute::Series)
}

/// Two-term small-hbar expansion of the coherent-state overlap:
/// (Gamma(n+p)/(2 sqrt pi)) (w.z/h^2)^((1/2-p-n)/2) e^(2 sqrt(w.z)/h)
/// [1 - (n+p-3/2)(n+p-1/2) h / (4 sqrt(w.z))], with `order` = 0 dropping the
/// bracket correction. Valid off the cut; the reported error is the next
/// expansion term.
pub fn coherent_inner_asymptotic(
    z: &[Complex64],
    w: &[Complex64],
    params: &ModelParams,
    order: u8,
) -> Result<KernelValue> {
    let xi = dot(w, z);
    if xi.norm() == 0.0 {
        return Err(Error::Domain("coherent_inner_asymptotic requires w.z != 0".into()));
    }
    if xi.arg().abs() > PI - ASYMPTOTIC_ARG_MARGIN {
        return Err(Error::AsymptoticRegion(format!(
            "Arg(w.z) = {} is within {} of the cut; use the series route",
            xi.arg(),
            ASYMPTOTIC_ARG_MARGIN
        )));
    }
    if order > 1 {
        return Err(Error::Config("order must be 0 or 1".into()));
    }
    let b = params.n as f64 + params.p;
    let nu = b - 1.0;
    let s = principal_sqrt(xi);
    let omega = 2.0 * s / params.hbar;
    let pref = log_gamma(b)?.exp() / (2.0 * PI.sqrt())
        * principal_powf(xi / (params.hbar * params.hbar), 0.5 * (0.5 - b))
        * (2.0 * s / params.hbar).exp();
    // expansion terms via the standard recurrence
    let t1 = (1.0 - 4.0 * nu * nu) / (8.0 * omega);
    let t2 = t1 * Complex64::new(9.0 - 4.0 * nu * nu, 0.0) / (16.0 * omega);
    let (bracket, next) = if order == 0 {
        (Complex64::new(1.0, 0.0), t1)
    } else {
        (Complex64::new(1.0, 0.0) + t1, t2)
    };
    Ok(KernelValue {
        value: pref * bracket,
        route: KernelRoute::Asymptotic,
        est_abs_error: (pref * next).norm(),
    })
}

/// Alternate expansion branch for arguments taken with Arg in (0, 2pi):
/// the overlap carries both exponentials,
/// e^(2s/h) + e^(-2s/h) e^(i pi (n+p-1/2)), to leading order. Off the cut
/// it agrees with [`coherent_inner_asymptotic`] up to O(hbar^inf).
pub fn coherent_inner_asymptotic_alt(
    z: &[Complex64],
    w: &[Complex64],
    params: &ModelParams,
) -> Result<KernelValue> {
    let xi = dot(w, z);
    if xi.norm() == 0.0 {
        return Err(Error::Domain("alternate expansion requires w.z != 0".into()));
    }
    let b = params.n as f64 + params.p;
    // branch with Arg in (0, 2pi)
    let arg = if xi.arg() <= 0.0 {
        xi.arg() + 2.0 * PI
    } else {
        xi.arg()
    };
    let s = Complex64::from_polar(xi.norm().sqrt(), 0.5 * arg);
    let ln_mag = (xi.norm() / (params.hbar * params.hbar)).ln() * (0.5 * (0.5 - b));
    let pw = Complex64::from_polar(ln_mag.exp(), arg * 0.5 * (0.5 - b));
    let osc = (2.0 * s / params.hbar).exp()
        + (-2.0 * s / params.hbar).exp() * Complex64::from_polar(1.0, PI * (b - 0.5));
    let pref = log_gamma(b)?.exp() / (2.0 * PI.sqrt());
    let value = pref * pw * osc;
    Ok(KernelValue {
        value,
        route: KernelRoute::Asymptotic,
        est_abs_error: value.norm() * params.hbar / xi.norm().sqrt(),
    })
}

/// Reproducing kernel of the sphere space O:
/// H_n(x, y) = 2F1(n, 1; 1; x.y) = (1 - x.y)^(-n).
pub fn kernel_h(x: &[Complex64], y: &[Complex64], n: usize) -> Result<Complex64> {
    let t = dot(x, y);
    if (t - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
        return Err(Error::Domain("kernel_h pole at x.y = 1".into()));
    }
    hyp2f1_geom(n as u32, t)
}

/// g(z) = sum_l sqrt(a l + 1) z^l / l!, the p = -1 coherent-state profile
/// with a = 1/(n-1).
pub fn g_series(z: Complex64, a: f64) -> EvalResult {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_term = 1.0f64;
    let mut terms = 1usize;
    let mut last = 0.0f64;
    for l in 0..3000u32 {
        let lf = l as f64;
        let cr = ((a * (lf + 1.0) + 1.0) / (a * lf + 1.0)).sqrt();
        term = term * z * cr / (lf + 1.0);
        sum += term;
        terms += 1;
        max_term = max_term.max(term.norm());
        last = term.norm();
        if last < 1e-17 * sum.norm().max(1e-300) && lf > z.norm() {
            break;
        }
    }
    EvalResult {
        value: sum,
        est_abs_error: last + max_term * f64::EPSILON * 8.0,
        terms_used: terms,
    }
}

/// Leading asymptotic sqrt(a) z^(1/2) e^z [1 + a1/z + a2/z^2] inside the
/// cone Re z > 0, |Im z| <= cone * Re z. The constants a1, a2 are fitted by
/// [`fit_g_constants`], never assumed.
pub fn g_asymptotic(z: Complex64, a: f64, a1: f64, a2: f64, cone: f64) -> Result<Complex64> {
    if !(z.re > 0.0) || z.im.abs() > cone * z.re {
        return Err(Error::AsymptoticRegion(format!(
            "g_asymptotic requires Re z > 0 and |Im z| <= {cone} Re z, got {z}"
        )));
    }
    let corr = Complex64::new(1.0, 0.0) + a1 / z + a2 / (z * z);
    Ok(a.sqrt() * principal_sqrt(z) * z.exp() * corr)
}

/// Least-squares fit of the correction constants in
/// g(z) / (sqrt(a) z^(1/2) e^z) = 1 + a1/z + a2/z^2 over real sample points.
pub fn fit_g_constants(a: f64, zs: &[f64]) -> (f64, f64) {
    // 2x2 normal equations in the basis {1/z, 1/z^2}
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &z in zs {
        let g = g_series(Complex64::new(z, 0.0), a).value.re;
        let lead = a.sqrt() * z.sqrt() * z.exp();
        let r = g / lead - 1.0;
        let x1 = 1.0 / z;
        let x2 = x1 * x1;
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * r;
        b2 += x2 * r;
    }
    let det = s11 * s22 - s12 * s12;
    let a1 = (b1 * s22 - b2 * s12) / det;
    let a2 = (s11 * b2 - s12 * b1) / det;
    (a1, a2)
}

/// Truncated coefficient form of the coherent overlap:
/// sum_{|k| <= L} conj(Phi_k(z)) Phi_k(w); tends to T(w, z) as L grows.
pub fn coherent_inner_truncated(model: &Model, z: &[Complex64], w: &[Complex64]) -> Complex64 {
    let u = coherent_coeffs(model, z);
    let v = coherent_coeffs(model, w);
    let terms: Vec<Complex64> = u
        .coeffs
        .iter()
        .zip(&v.coeffs)
        .map(|(a, b)| a * b.conj())
        .collect();
    pairwise_sum(&terms)
}

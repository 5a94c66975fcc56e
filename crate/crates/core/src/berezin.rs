//! Toeplitz operators on the truncated sphere space, Berezin symbols and
//! their extensions off the diagonal, the closed-form symbol series for
//! monomial Toeplitz symbols, and the semiclassical fit of the Berezin
//! transform against its symbol.

use crate::hilbert::{phi_norm_const, Model, ModelParams};
use crate::kernels::{coherent_coeffs, dot, kernel_t, KernelRoute};
use crate::multiindex::{diagonal_sphere_moment_ln, MultiIndex};
use crate::specfun::{
    bessel_i, ln_factorial, ln_pochhammer, log_gamma, principal_powf, principal_sqrt,
};
use crate::util::{linear_fit, pairwise_sum};
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

/// Relative floor under which the coherent overlap counts as singular.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// Polynomial symbol psi(x) = sum_t coeff_t x^(a_t) conj(x)^(b_t).
#[derive(Clone, Debug)]
pub struct SymbolPoly {
    pub n: usize,
    pub terms: Vec<(MultiIndex, MultiIndex, Complex64)>,
}

impl SymbolPoly {
    pub fn monomial(a: MultiIndex, b: MultiIndex, coeff: Complex64) -> Self {
        let n = a.dim();
        SymbolPoly {
            n,
            terms: vec![(a, b, coeff)],
        }
    }

    /// |x_j|^2 as a symbol.
    pub fn abs_sq(n: usize, j: usize) -> Self {
        let e = MultiIndex::unit(n, j);
        SymbolPoly::monomial(e.clone(), e, Complex64::new(1.0, 0.0))
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        SymbolPoly::monomial(MultiIndex::zeros(n), MultiIndex::zeros(n), c)
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        let xbar: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
        self.terms
            .iter()
            .map(|(a, b, c)| c * a.monomial(x) * b.monomial(&xbar))
            .sum()
    }

    /// Holomorphic partial derivative d/dx_j.
    pub fn d_holo(&self, j: usize) -> SymbolPoly {
        let terms = self
            .terms
            .iter()
            .filter_map(|(a, b, c)| {
                let kj = a.get(j);
                if kj == 0 {
                    None
                } else {
                    let down = a.checked_sub(&MultiIndex::unit(self.n, j)).unwrap();
                    Some((down, b.clone(), c * kj as f64))
                }
            })
            .collect();
        SymbolPoly { n: self.n, terms }
    }

    /// Antiholomorphic partial derivative d/d conj(x_j).
    pub fn d_anti(&self, j: usize) -> SymbolPoly {
        let terms = self
            .terms
            .iter()
            .filter_map(|(a, b, c)| {
                let kj = b.get(j);
                if kj == 0 {
                    None
                } else {
                    let down = b.checked_sub(&MultiIndex::unit(self.n, j)).unwrap();
                    Some((a.clone(), down, c * kj as f64))
                }
            })
            .collect();
        SymbolPoly { n: self.n, terms }
    }
}

/// Operator on the truncated sphere space in the orthonormal basis phi_k:
/// entries[m, k] = <A phi_k, phi_m> over the graded-lex index set.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub params: ModelParams,
    pub entries: Array2<Complex64>,
}

impl OperatorMatrix {
    pub fn identity(model: &Model) -> Self {
        let dim = model.dim();
        let mut entries = Array2::zeros((dim, dim));
        for i in 0..dim {
            entries[(i, i)] = Complex64::new(1.0, 0.0);
        }
        OperatorMatrix {
            params: model.params,
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for m in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += self.entries[(m, k)] * v[k];
            }
            out[m] = acc;
        }
        out
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            params: self.params,
            entries: self.entries.dot(&other.entries),
        }
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        let dim = self.dim();
        let mut entries = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                entries[(i, j)] = self.entries[(j, i)].conj();
            }
        }
        OperatorMatrix {
            params: self.params,
            entries,
        }
    }

    pub fn add_scaled(&self, other: &OperatorMatrix, c: Complex64) -> OperatorMatrix {
        OperatorMatrix {
            params: self.params,
            entries: &self.entries + &other.entries.mapv(|v| v * c),
        }
    }

    pub fn hermitian_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Toeplitz operator of the monomial symbol psi(x) = x^a conj(x)^b on the
/// truncated space: entries N_k N_m int x^(a+k) conj(x)^(b+m) dS, nonzero
/// only on m = k + a - b. The compression P acts as the degree-<=L
/// truncation: target indices beyond the ladder are dropped.
pub fn toeplitz_monomial(a: &MultiIndex, b: &MultiIndex, model: &Model) -> Result<OperatorMatrix> {
    let n = model.params.n;
    if a.dim() != n || b.dim() != n {
        return Err(Error::Mismatch("symbol indices have wrong dimension".into()));
    }
    let dim = model.dim();
    let mut entries = Array2::zeros((dim, dim));
    for (ki, k) in model.index_set.iter().enumerate() {
        let target = k.add(a);
        let m = match target.checked_sub(b) {
            Some(m) => m,
            None => continue,
        };
        if let Some(mi) = model.index_set.position(&m) {
            let ln_moment = diagonal_sphere_moment_ln(n, &target);
            let value =
                phi_norm_const(k, n) * phi_norm_const(&m, n) * ln_moment.exp();
            entries[(mi, ki)] = Complex64::new(value, 0.0);
        }
    }
    Ok(OperatorMatrix {
        params: model.params,
        entries,
    })
}

/// Toeplitz operator of a polynomial symbol: sum of monomial blocks.
pub fn toeplitz_poly(sym: &SymbolPoly, model: &Model) -> Result<OperatorMatrix> {
    let dim = model.dim();
    let mut entries = Array2::zeros((dim, dim));
    for (a, b, c) in &sym.terms {
        let block = toeplitz_monomial(a, b, model)?;
        entries = entries + block.entries.mapv(|v| v * c);
    }
    Ok(OperatorMatrix {
        params: model.params,
        entries,
    })
}

/// Matrix-free application of a polynomial Toeplitz operator; O(terms * dim)
/// instead of materializing the dim^2 matrix (needed for the large degrees
/// of the small-hbar fits).
pub fn toeplitz_apply(sym: &SymbolPoly, model: &Model, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = model.params.n;
    let dim = model.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (a, b, c) in &sym.terms {
        if a.dim() != n || b.dim() != n {
            return Err(Error::Mismatch("symbol indices have wrong dimension".into()));
        }
        for (ki, k) in model.index_set.iter().enumerate() {
            if v[ki].norm_sqr() == 0.0 {
                continue;
            }
            let target = k.add(a);
            let m = match target.checked_sub(b) {
                Some(m) => m,
                None => continue,
            };
            if let Some(mi) = model.index_set.position(&m) {
                let ln_moment = diagonal_sphere_moment_ln(n, &target);
                let value = phi_norm_const(k, n) * phi_norm_const(&m, n) * ln_moment.exp();
                out[mi] += c * value * v[ki];
            }
        }
    }
    Ok(out)
}

/// Numerator <A K(., z), K(., w)> in coefficient form.
pub fn coherent_matrix_element(
    a: &OperatorMatrix,
    model: &Model,
    z: &[Complex64],
    w: &[Complex64],
) -> Complex64 {
    let u = coherent_coeffs(model, z);
    let v = coherent_coeffs(model, w);
    let au = a.matvec(&u.coeffs);
    let terms: Vec<Complex64> = au
        .iter()
        .zip(&v.coeffs)
        .map(|(x, y)| x * y.conj())
        .collect();
    pairwise_sum(&terms)
}

/// Extended Berezin symbol B(A)(z, w) = <A K_z, K_w> / <K_z, K_w> on the
/// truncated model. The denominator is the truncated overlap (series route
/// on the diagonal, where it is positive); pairs with a relative overlap
/// below `floor` are rejected as members of the singular set.
pub fn berezin_symbol(
    a: &OperatorMatrix,
    z: &[Complex64],
    w: &[Complex64],
    model: &Model,
    floor: f64,
) -> Result<Complex64> {
    let u = coherent_coeffs(model, z);
    let v = coherent_coeffs(model, w);
    let den_terms: Vec<Complex64> = u
        .coeffs
        .iter()
        .zip(&v.coeffs)
        .map(|(x, y)| x * y.conj())
        .collect();
    let den = pairwise_sum(&den_terms);
    let scale = u.norm() * v.norm();
    if den.norm() < floor * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularSet(format!(
            "|<K_z, K_w>| = {:.3e} under floor {floor:.1e} x {scale:.3e}",
            den.norm()
        )));
    }
    let au = a.matvec(&u.coeffs);
    let num_terms: Vec<Complex64> = au
        .iter()
        .zip(&v.coeffs)
        .map(|(x, y)| x * y.conj())
        .collect();
    Ok(pairwise_sum(&num_terms) / den)
}

/// Schwartz kernel of the conjugated operator: K_A(z, w) = <A K_w, K_z>.
pub fn schwartz_kernel(
    a: &OperatorMatrix,
    z: &[Complex64],
    w: &[Complex64],
    model: &Model,
) -> Complex64 {
    coherent_matrix_element(a, model, w, z)
}

/// Closed-form extended symbol of the Toeplitz operator with holomorphic
/// monomial symbol x^k: the degree series with Bessel prefactor.
pub fn berezin_toeplitz_series(
    k: &MultiIndex,
    z: &[Complex64],
    w: &[Complex64],
    params: &ModelParams,
    tol: f64,
) -> Result<Complex64> {
    let n = params.n as f64;
    let b = n + params.p;
    let nu = b - 1.0;
    let zeta = dot(w, z) / (params.hbar * params.hbar);
    if zeta.norm() == 0.0 {
        return Err(Error::SingularSet("w.z = 0".into()));
    }
    let omega = 2.0 * principal_sqrt(zeta);
    let bessel = bessel_i(nu, omega)?;
    let scale = (omega.re.abs().exp() / (2.0 * std::f64::consts::PI * omega.norm()).sqrt())
        .max(f64::MIN_POSITIVE);
    if bessel.value.norm() < SINGULAR_FLOOR * scale {
        return Err(Error::SingularSet(format!(
            "I_(n+p-1)(2 sqrt(w.z)/hbar) = {:.3e} below floor",
            bessel.value.norm()
        )));
    }
    let kd = k.degree();
    // (w/hbar)^k
    let w_scaled: Vec<Complex64> = w.iter().map(|v| v / params.hbar).collect();
    let w_pow = k.monomial(&w_scaled);
    // series sum_l zeta^l (c_l / c_{|k|+l}) / (l! Gamma(|k|+l+n+p))
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zeta_pow = Complex64::new(1.0, 0.0);
    let mut small = 0;
    for l in 0..2000u32 {
        let ln_c_ratio = 0.5
            * (ln_pochhammer(n, l)? - ln_pochhammer(b, l)? - ln_pochhammer(n, kd + l)?
                + ln_pochhammer(b, kd + l)?);
        let ln_mag = ln_c_ratio - ln_factorial(l) - log_gamma(kd as f64 + l as f64 + b)?;
        let term = zeta_pow * ln_mag.exp();
        sum += term;
        if term.norm() < tol * sum.norm().max(1e-300) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        zeta_pow *= zeta;
    }
    let pref = principal_powf(zeta, 0.5 * (b - 1.0)) / bessel.value;
    Ok(pref * w_pow * sum)
}

/// p = 0 closed form: (w / sqrt(w.z))^k I_{n+|k|-1} / I_{n-1} at 2 sqrt(w.z)/hbar.
pub fn berezin_toeplitz_p0(
    k: &MultiIndex,
    z: &[Complex64],
    w: &[Complex64],
    params: &ModelParams,
) -> Result<Complex64> {
    if params.p.abs() > 1e-12 {
        return Err(Error::Config(format!(
            "berezin_toeplitz_p0 requires p = 0, got {}",
            params.p
        )));
    }
    let n = params.n as f64;
    let wz = dot(w, z);
    if wz.norm() == 0.0 {
        return Err(Error::SingularSet("w.z = 0".into()));
    }
    let s = principal_sqrt(wz);
    let omega = 2.0 * s / params.hbar;
    let num = bessel_i(n + k.degree() as f64 - 1.0, omega)?;
    let den = bessel_i(n - 1.0, omega)?;
    let scale = (omega.re.abs().exp() / (2.0 * std::f64::consts::PI * omega.norm()).sqrt())
        .max(f64::MIN_POSITIVE);
    if den.value.norm() < SINGULAR_FLOOR * scale {
        return Err(Error::SingularSet(format!(
            "I_(n-1)(2 sqrt(w.z)/hbar) = {:.3e} below floor",
            den.value.norm()
        )));
    }
    let ratio_vec: Vec<Complex64> = w.iter().map(|v| v / s).collect();
    Ok(k.monomial(&ratio_vec) * num.value / den.value)
}

/// Result of a log-log slope fit of Berezin-transform errors against hbar.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// When every error sits at rounding level the fit is meaningless and
    /// the transform is flagged exact instead.
    pub exact: bool,
    /// (hbar, value re, value im, target, abs error) per grid point.
    pub points: Vec<(f64, f64, f64, f64, f64)>,
}

/// Diagonal Berezin transform of the Toeplitz operator of `sym` at z on a
/// decreasing hbar grid, fitted as |B - sym(z/|z|)| ~ C hbar^slope.
///
/// The truncation degree follows the documented rule L >= 6|z|/hbar_min so
/// the coefficient tail is negligible against the smallest hbar effect.
pub fn berezin_asymptotics_fit(
    sym: &SymbolPoly,
    z: &[Complex64],
    hbar_grid: &[f64],
    n: usize,
    p: f64,
) -> Result<AsymptoticFit> {
    if hbar_grid.len() < 4 {
        return Err(Error::Config("hbar grid needs at least 4 points".into()));
    }
    if !hbar_grid.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::Config("hbar grid must be strictly decreasing".into()));
    }
    let znorm = crate::kernels::norm(z);
    if znorm == 0.0 {
        return Err(Error::Domain("z must be nonzero".into()));
    }
    let h_min = *hbar_grid.last().unwrap();
    let l_max = (6.0 * znorm / h_min).ceil() as u32;
    let zn: Vec<Complex64> = z.iter().map(|v| v / znorm).collect();
    let target = sym.eval(&zn);
    let mut points = Vec::new();
    let mut errs = Vec::new();
    for &hbar in hbar_grid {
        let params = ModelParams::new(n, p, hbar, l_max)?;
        let model = Model::new(params);
        let u = coherent_coeffs(&model, z);
        let au = toeplitz_apply(sym, &model, &u.coeffs)?;
        let num_terms: Vec<Complex64> = au
            .iter()
            .zip(&u.coeffs)
            .map(|(x, y)| x * y.conj())
            .collect();
        let num = pairwise_sum(&num_terms);
        let den_terms: Vec<Complex64> = u.coeffs.iter().map(|x| x * x.conj()).collect();
        let den = pairwise_sum(&den_terms);
        let b = num / den;
        let err = (b - target).norm();
        points.push((hbar, b.re, b.im, target.re, err));
        errs.push(err);
    }
    let scale = target.norm().max(1.0);
    if errs.iter().all(|e| *e < 1e-13 * scale) {
        return Ok(AsymptoticFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: 1.0,
            exact: true,
            points,
        });
    }
    let xs: Vec<f64> = hbar_grid.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(AsymptoticFit {
        slope,
        intercept,
        r_squared: r2,
        exact: false,
        points,
    })
}

/// Reference for the Berezin transform on the diagonal via the overlap
/// kernel: T(z, z) computed with the series route, used by fits requiring a
/// denominator positivity guarantee.
pub fn diagonal_overlap(z: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    Ok(kernel_t(z, z, params, KernelRoute::Series)?.value)
}

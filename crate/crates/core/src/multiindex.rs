//! Multi-index combinatorics and the closed-form inner products of monomial
//! blocks on the complex sphere and on E_{n,p}, together with the brute-force
//! multinomial expansion oracle used to validate the closed forms.

use crate::specfun::{ln_factorial, ln_pochhammer, log_gamma};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;

/// Exponent vector k = (k_1, ..., k_n) indexing monomials z^k.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    parts: Vec<u32>,
}

impl MultiIndex {
    pub fn new(parts: Vec<u32>) -> Self {
        MultiIndex { parts }
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex {
            parts: vec![0; n],
        }
    }

    /// e_j, the unit index in coordinate j.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut parts = vec![0; n];
        parts[j] = 1;
        MultiIndex { parts }
    }

    pub fn dim(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn get(&self, j: usize) -> u32 {
        self.parts[j]
    }

    /// |k| = sum of parts.
    pub fn degree(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// ln(k!) = sum ln(k_j!).
    pub fn ln_factorial(&self) -> f64 {
        self.parts.iter().map(|&k| ln_factorial(k)).sum()
    }

    /// Componentwise k >= other.
    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.parts
            .iter()
            .zip(&other.parts)
            .all(|(a, b)| a >= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// self - other when self dominates other.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dominates(other) {
            Some(MultiIndex {
                parts: self
                    .parts
                    .iter()
                    .zip(&other.parts)
                    .map(|(a, b)| a - b)
                    .collect(),
            })
        } else {
            None
        }
    }

    /// z^k over the given coordinates.
    pub fn monomial(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (zi, &ki) in z.iter().zip(&self.parts) {
            for _ in 0..ki {
                acc *= zi;
            }
        }
        acc
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded-lexicographic total order: degree first, then lexicographic with
/// the first coordinate weighted heaviest, so within degree 2 at n = 2 the
/// order is (2,0), (1,1), (0,2).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.parts.cmp(&self.parts))
    }
}

/// All multi-indices of length n with |k| = deg, in graded-lex order.
pub fn enumerate_degree(n: usize, deg: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, deg: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if n == 1 {
            prefix.push(deg);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=deg).rev() {
            prefix.push(first);
            rec(n - 1, deg - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Ordered set of all multi-indices with degree <= l_max; the common basis
/// labelling for coefficient vectors and operator matrices.
#[derive(Clone, Debug)]
pub struct IndexSet {
    n: usize,
    l_max: u32,
    indices: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
}

impl IndexSet {
    pub fn new(n: usize, l_max: u32) -> Self {
        let mut indices = Vec::new();
        for deg in 0..=l_max {
            indices.extend(enumerate_degree(n, deg));
        }
        let positions = indices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        IndexSet {
            n,
            l_max,
            indices,
            positions,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        self.positions.get(k).copied()
    }
}

/// Normalized-sphere moment of a monomial pair:
/// int_{S^n} x^a conj(x)^b dS = 0 unless a = b, in which case it equals
/// (n-1)! a! / (n-1+|a|)!.
pub fn monomial_sphere_moment(n: usize, a: &MultiIndex, b: &MultiIndex) -> f64 {
    debug_assert_eq!(a.dim(), n);
    debug_assert_eq!(b.dim(), n);
    if a != b {
        return 0.0;
    }
    diagonal_sphere_moment_ln(n, a).exp()
}

/// ln of the diagonal moment (n-1)! a! / (n-1+|a|)!.
pub fn diagonal_sphere_moment_ln(n: usize, a: &MultiIndex) -> f64 {
    log_gamma(n as f64).unwrap() + a.ln_factorial()
        - log_gamma((n + a.degree() as usize) as f64).unwrap()
}

/// Closed-form pairing F = <x^k (x.z)^s, x^m (x.w)^l>_{S^n}
/// = int x^k conj(x)^m (x.z)^s (w.x)^l dS.
///
/// Zero when |k|+s != |m|+l; otherwise requires one of the indices to
/// dominate the other componentwise (the two printed cases). Callers fall
/// back on [`sphere_pairing_oracle`] when neither dominates.
pub fn sphere_pairing_closed(
    k: &MultiIndex,
    m: &MultiIndex,
    s: u32,
    l: u32,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<Complex64> {
    let n = k.dim();
    if m.dim() != n || z.len() != n || w.len() != n {
        return Err(Error::Mismatch("index/vector dimensions differ".into()));
    }
    if k.degree() + s != m.degree() + l {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // zeta_j = conj(z_j) w_j appears in both dominated branches.
    let zeta: Vec<Complex64> = z.iter().zip(w).map(|(zi, wi)| zi.conj() * wi).collect();
    if m.dominates(k) {
        // prefactor (n-1)! (|m|-|k|+l)! / (n-1+|m|+l)! * conj(z)^(m-k)
        let diff = m.checked_sub(k).expect("dominance checked");
        let ln_pref = log_gamma(n as f64).unwrap()
            + ln_factorial(m.degree() - k.degree() + l)
            - log_gamma((n as u32 + m.degree() + l) as f64).unwrap();
        let zbar_pow = diff.monomial(&z.iter().map(|v| v.conj()).collect::<Vec<_>>());
        let mut sum = Complex64::new(0.0, 0.0);
        for beta in enumerate_degree(n, l) {
            let ln_mag = ln_factorial(l) - beta.ln_factorial() + m.add(&beta).ln_factorial()
                - diff.add(&beta).ln_factorial();
            sum += ln_mag.exp() * beta.monomial(&zeta);
        }
        Ok(ln_pref.exp() * zbar_pow * sum)
    } else if k.dominates(m) {
        let diff = k.checked_sub(m).expect("dominance checked");
        let ln_pref = log_gamma(n as f64).unwrap()
            + ln_factorial(s + k.degree() - m.degree())
            - log_gamma((n as u32 + k.degree() + s) as f64).unwrap();
        let w_pow = diff.monomial(w);
        let mut sum = Complex64::new(0.0, 0.0);
        for alpha in enumerate_degree(n, s) {
            let ln_mag = ln_factorial(s) - alpha.ln_factorial() + k.add(&alpha).ln_factorial()
                - diff.add(&alpha).ln_factorial();
            sum += ln_mag.exp() * alpha.monomial(&zeta);
        }
        Ok(ln_pref.exp() * w_pow * sum)
    } else {
        Err(Error::NotDominated)
    }
}

/// Brute-force route for the same pairing: expand (x.z)^s and (w.x)^l by the
/// multinomial theorem and reduce every term to a diagonal sphere moment.
/// Exact up to rounding; the size bound keeps the expansion in memory.
pub fn sphere_pairing_oracle(
    k: &MultiIndex,
    m: &MultiIndex,
    s: u32,
    l: u32,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<Complex64> {
    let n = k.dim();
    if m.dim() != n || z.len() != n || w.len() != n {
        return Err(Error::Mismatch("index/vector dimensions differ".into()));
    }
    let total = s + l + k.degree() + m.degree();
    if total > 24 || n > 3 {
        return Err(Error::SizeBound(format!(
            "oracle expansion limited to s+l+|k|+|m| <= 24 and n <= 3, got {total} at n = {n}"
        )));
    }
    if k.degree() + s != m.degree() + l {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let zbar: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for alpha in enumerate_degree(n, s) {
        // The surviving beta satisfies k + alpha = m + beta.
        let target = k.add(&alpha);
        let beta = match target.checked_sub(m) {
            Some(b) => b,
            None => continue,
        };
        if beta.degree() != l {
            continue;
        }
        let ln_mag = ln_factorial(s) - alpha.ln_factorial() + ln_factorial(l)
            - beta.ln_factorial()
            + diagonal_sphere_moment_ln(n, &target);
        acc += ln_mag.exp() * alpha.monomial(&zbar) * beta.monomial(w);
    }
    Ok(acc)
}

/// Monomial-block inner product on E_{n,p}: zero off the degree diagonal,
/// otherwise hbar^(2(|k|+s)) (n)_{|k|+s} (n+p)_{|k|+s} times the sphere
/// pairing. The three factors are combined in the log domain.
pub fn enp_moment(
    k: &MultiIndex,
    m: &MultiIndex,
    s: u32,
    l: u32,
    z: &[Complex64],
    w: &[Complex64],
    params: &crate::hilbert::ModelParams,
) -> Result<Complex64> {
    if k.degree() + s != m.degree() + l {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n = params.n;
    let j = k.degree() + s;
    let ln_factor = 2.0 * j as f64 * params.hbar.ln()
        + ln_pochhammer(n as f64, j)?
        + ln_pochhammer(n as f64 + params.p, j)?;
    let pairing = match sphere_pairing_closed(k, m, s, l, z, w) {
        Ok(v) => v,
        Err(Error::NotDominated) => sphere_pairing_oracle(k, m, s, l, z, w)?,
        Err(e) => return Err(e),
    };
    Ok(ln_factor.exp() * pairing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ModelParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn enumerate_degree_graded_lex() {
        let v = enumerate_degree(2, 0);
        assert_eq!(v, vec![MultiIndex::new(vec![0, 0])]);
        let v = enumerate_degree(2, 2);
        assert_eq!(
            v,
            vec![
                MultiIndex::new(vec![2, 0]),
                MultiIndex::new(vec![1, 1]),
                MultiIndex::new(vec![0, 2]),
            ]
        );
        // stars and bars: C(2+3-1, 3-1) = 6
        assert_eq!(enumerate_degree(3, 2).len(), 6);
        let mut sorted = enumerate_degree(3, 4);
        let orig = sorted.clone();
        sorted.sort();
        assert_eq!(sorted, orig, "enumeration must already be in order");
    }

    #[test]
    fn index_set_size_and_positions() {
        // size = sum_{l<=L} C(l+n-1, n-1)
        let set = IndexSet::new(3, 5);
        let expect: usize = (0..=5).map(|l: u32| ((l + 1) * (l + 2) / 2) as usize).sum();
        assert_eq!(set.len(), expect);
        for (i, k) in set.iter().enumerate() {
            assert_eq!(set.position(k), Some(i));
        }
    }

    #[test]
    fn sphere_moment_values() {
        let n = 2;
        let k00 = MultiIndex::new(vec![0, 0]);
        assert_relative_eq!(monomial_sphere_moment(n, &k00, &k00), 1.0, epsilon = 1e-15);
        let k11 = MultiIndex::new(vec![1, 1]);
        assert_relative_eq!(
            monomial_sphere_moment(n, &k11, &k11),
            1.0 / 6.0,
            max_relative = 1e-13
        );
        let k200 = MultiIndex::new(vec![2, 0, 0]);
        assert_relative_eq!(
            monomial_sphere_moment(3, &k200, &k200),
            1.0 / 6.0,
            max_relative = 1e-13
        );
        let k10 = MultiIndex::new(vec![1, 0]);
        let k01 = MultiIndex::new(vec![0, 1]);
        assert_eq!(monomial_sphere_moment(2, &k10, &k01), 0.0);
    }

    #[test]
    fn pairing_degree_mismatch_is_zero() {
        let k = MultiIndex::new(vec![1, 0]);
        let m = MultiIndex::new(vec![0, 0]);
        let z = [c(0.3, 0.1), c(-0.2, 0.9)];
        let w = [c(1.0, 0.0), c(0.5, -0.5)];
        let f = sphere_pairing_closed(&k, &m, 1, 4, &z, &w).unwrap();
        assert_eq!(f, c(0.0, 0.0));
        let f = sphere_pairing_oracle(&k, &m, 1, 4, &z, &w).unwrap();
        assert_eq!(f, c(0.0, 0.0));
    }

    #[test]
    fn pairing_normalization_and_simple_value() {
        let n = 2;
        let k0 = MultiIndex::zeros(n);
        let z = [c(1.0, 0.0), c(0.0, 0.0)];
        let f = sphere_pairing_closed(&k0, &k0, 0, 0, &z, &z).unwrap();
        assert_relative_eq!(f.re, 1.0, epsilon = 1e-14);
        // <(x.z), (w.x)> with z = w = e_1 equals the moment of (1,0): 1/2.
        let f = sphere_pairing_closed(&k0, &k0, 1, 1, &z, &z).unwrap();
        assert_relative_eq!(f.re, 0.5, max_relative = 1e-13);
        let o = sphere_pairing_oracle(&k0, &k0, 1, 1, &z, &z).unwrap();
        assert_relative_eq!(f.re, o.re, max_relative = 1e-13);
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                c(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect()
    }

    /// 200 random dominated cases per n: closed form vs oracle to 1e-12.
    #[test]
    fn closed_form_matches_oracle_on_dominated_cases() {
        for n in [2usize, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(42 + n as u64);
            let mut done = 0;
            while done < 200 {
                let k = MultiIndex::new((0..n).map(|_| rng.gen_range(0..3u32)).collect());
                let extra = MultiIndex::new((0..n).map(|_| rng.gen_range(0..3u32)).collect());
                let m = k.add(&extra); // m >= k
                let l = rng.gen_range(0..3u32);
                let s = m.degree() + l - k.degree();
                if k.degree() + s + m.degree() + l > 24 {
                    continue;
                }
                let z = random_vec(n, &mut rng);
                let w = random_vec(n, &mut rng);
                let closed = sphere_pairing_closed(&k, &m, s, l, &z, &w).unwrap();
                let oracle = sphere_pairing_oracle(&k, &m, s, l, &z, &w).unwrap();
                let scale = closed.norm().max(oracle.norm()).max(1e-30);
                assert!(
                    (closed - oracle).norm() <= 1e-12 * scale,
                    "n={n} k={k} m={m} s={s} l={l}: {closed} vs {oracle}"
                );
                done += 1;
            }
        }
    }

    #[test]
    fn oracle_covers_non_dominated_cases() {
        // k = (1,0), m = (0,1): neither dominates; closed form must refuse,
        // oracle must produce a finite value with the Hermitian symmetry.
        let k = MultiIndex::new(vec![1, 0]);
        let m = MultiIndex::new(vec![0, 1]);
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let z = [c(inv_sqrt2, 0.0), c(inv_sqrt2, 0.0)];
        let w = z;
        assert!(matches!(
            sphere_pairing_closed(&k, &m, 1, 1, &z, &w),
            Err(Error::NotDominated)
        ));
        let f = sphere_pairing_oracle(&k, &m, 1, 1, &z, &w).unwrap();
        let g = sphere_pairing_oracle(&m, &k, 1, 1, &w, &z).unwrap();
        assert!((f - g.conj()).norm() < 1e-14);
    }

    #[test]
    fn oracle_size_bound_enforced() {
        let k = MultiIndex::new(vec![10, 10]);
        let z = [c(1.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            sphere_pairing_oracle(&k, &k, 3, 3, &z, &z),
            Err(Error::SizeBound(_))
        ));
    }

    #[test]
    fn enp_moment_reference_values() {
        let params = ModelParams::new(2, 0.0, 1.0, 8).unwrap();
        let k0 = MultiIndex::zeros(2);
        let z = [c(0.3, -0.4), c(0.9, 0.2)];
        // normalization (1,1)_p = 1
        let v = enp_moment(&k0, &k0, 0, 0, &z, &z, &params).unwrap();
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-13);
        // degree mismatch
        let k10 = MultiIndex::new(vec![1, 0]);
        let v = enp_moment(&k10, &k0, 0, 0, &z, &z, &params).unwrap();
        assert_eq!(v, c(0.0, 0.0));
        // (2)_1 (2)_1 * 1/2 = 2 for k = m = (1,0)
        let v = enp_moment(&k10, &k10, 0, 0, &z, &z, &params).unwrap();
        assert_relative_eq!(v.re, 2.0, max_relative = 1e-13);
    }

    proptest! {
        /// Hermitian symmetry of the pairing under (k,s,z) <-> (m,l,w).
        #[test]
        fn pairing_hermitian_symmetry(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2usize;
            let k = MultiIndex::new((0..n).map(|_| rng.gen_range(0..2u32)).collect());
            let extra = MultiIndex::new((0..n).map(|_| rng.gen_range(0..2u32)).collect());
            let m = k.add(&extra);
            let l = rng.gen_range(0..3u32);
            let s = m.degree() + l - k.degree();
            let z = random_vec(n, &mut rng);
            let w = random_vec(n, &mut rng);
            let f = sphere_pairing_closed(&k, &m, s, l, &z, &w).unwrap();
            let g = sphere_pairing_closed(&m, &k, l, s, &w, &z).unwrap();
            let scale = f.norm().max(1e-30);
            prop_assert!((f - g.conj()).norm() <= 1e-12 * scale);
        }

        /// Both routes return exactly zero on degree mismatch.
        #[test]
        fn degree_homogeneity(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3usize;
            let k = MultiIndex::new((0..n).map(|_| rng.gen_range(0..2u32)).collect());
            let m = MultiIndex::new((0..n).map(|_| rng.gen_range(0..2u32)).collect());
            let s = rng.gen_range(0..3u32);
            let l = rng.gen_range(0..3u32);
            prop_assume!(k.degree() + s != m.degree() + l);
            let z = random_vec(n, &mut rng);
            let w = random_vec(n, &mut rng);
            prop_assert_eq!(
                sphere_pairing_oracle(&k, &m, s, l, &z, &w).unwrap(),
                c(0.0, 0.0)
            );
            match sphere_pairing_closed(&k, &m, s, l, &z, &w) {
                Ok(v) => prop_assert_eq!(v, c(0.0, 0.0)),
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }
    }
}

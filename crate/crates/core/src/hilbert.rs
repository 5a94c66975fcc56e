//! Truncated models of the two Hilbert spaces: `O` spanned by the sphere
//! basis phi_k and E_{n,p} spanned by the entire basis Phi_k, plus the
//! diagonal isometry U between them. Everything is truncated at degree
//! `l_max`; operations over the degree ladder report no tail beyond that.

use crate::multiindex::{IndexSet, MultiIndex};
use crate::specfun::ln_pochhammer;
use crate::util::{fmt_f64, pairwise_sum};
use crate::{Error, Result};
use num_complex::Complex64;

/// The model quadruple (n, p, hbar, L).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Ambient complex dimension, n >= 2.
    pub n: usize,
    /// Weight parameter of the measure, p > -n.
    pub p: f64,
    /// Semiclassical parameter, hbar > 0.
    pub hbar: f64,
    /// Truncation degree of the basis ladder.
    pub l_max: u32,
}

impl ModelParams {
    pub fn new(n: usize, p: f64, hbar: f64, l_max: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {n}")));
        }
        if !(p > -(n as f64)) {
            return Err(Error::Config(format!("p must exceed -n, got p = {p}, n = {n}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
        }
        Ok(ModelParams { n, p, hbar, l_max })
    }

    /// c_{l,p}^2 = (n)_l / (n+p)_l, the coherent-state weights; returns the
    /// positive square root.
    pub fn coherent_weight(&self, l: u32) -> f64 {
        let n = self.n as f64;
        (0.5 * (ln_pochhammer(n, l).unwrap() - ln_pochhammer(n + self.p, l).unwrap())).exp()
    }
}

/// Which orthonormal basis a coefficient vector refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisSide {
    /// phi_k on the sphere side.
    Sphere,
    /// Phi_{k,p} on the holomorphic side.
    Holo,
}

/// Finite coefficient vector over multi-indices of degree <= l_max,
/// aligned with the graded-lex [`IndexSet`].
#[derive(Clone, Debug)]
pub struct CoeffVector {
    pub params: ModelParams,
    pub side: BasisSide,
    pub coeffs: Vec<Complex64>,
}

impl CoeffVector {
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// CSV form: columns k_1..k_n, re, im in graded-lex row order.
    pub fn to_csv(&self, index_set: &IndexSet) -> String {
        let n = self.params.n;
        let mut out = String::new();
        for j in 1..=n {
            out.push_str(&format!("k_{j},"));
        }
        out.push_str("re,im\n");
        for (k, c) in index_set.iter().zip(&self.coeffs) {
            for j in 0..n {
                out.push_str(&format!("{},", k.get(j)));
            }
            out.push_str(&fmt_f64(c.re));
            out.push(',');
            out.push_str(&fmt_f64(c.im));
            out.push('\n');
        }
        out
    }
}

/// Normalization constant of phi_k = sqrt((n)_{|k|}/k!) x^k, which has unit
/// norm against the normalized sphere measure.
pub fn phi_norm_const(k: &MultiIndex, n: usize) -> f64 {
    (0.5 * (ln_pochhammer(n as f64, k.degree()).unwrap() - k.ln_factorial())).exp()
}

/// Normalization constant of Phi_{k,p} = hbar^(-|k|) ((n+p)_{|k|} k!)^(-1/2) z^k.
pub fn cap_phi_norm_const(k: &MultiIndex, params: &ModelParams) -> f64 {
    let deg = k.degree();
    (-(deg as f64) * params.hbar.ln()
        - 0.5 * (ln_pochhammer(params.n as f64 + params.p, deg).unwrap() + k.ln_factorial()))
    .exp()
}

/// A parameter set together with its index set; the working context for
/// vector and operator computations.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: ModelParams,
    pub index_set: IndexSet,
}

impl Model {
    pub fn new(params: ModelParams) -> Self {
        let index_set = IndexSet::new(params.n, params.l_max);
        Model { params, index_set }
    }

    pub fn dim(&self) -> usize {
        self.index_set.len()
    }

    pub fn zero(&self, side: BasisSide) -> CoeffVector {
        CoeffVector {
            params: self.params,
            side,
            coeffs: vec![Complex64::new(0.0, 0.0); self.dim()],
        }
    }

    /// Basis vector delta_k.
    pub fn basis_vector(&self, side: BasisSide, k: &MultiIndex) -> Result<CoeffVector> {
        let mut v = self.zero(side);
        let idx = self
            .index_set
            .position(k)
            .ok_or_else(|| Error::Config(format!("index {k} outside degree <= {}", self.params.l_max)))?;
        v.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    fn check_compatible(&self, u: &CoeffVector, v: &CoeffVector) -> Result<()> {
        if u.side != v.side {
            return Err(Error::Mismatch("coefficient vectors on different sides".into()));
        }
        if u.params != v.params || u.params != self.params {
            return Err(Error::Mismatch("coefficient vectors built for different parameters".into()));
        }
        Ok(())
    }

    /// <u, v> = sum u_k conj(v_k); equals the integral inner product by
    /// orthonormality of either basis.
    pub fn inner_product(&self, u: &CoeffVector, v: &CoeffVector) -> Result<Complex64> {
        self.check_compatible(u, v)?;
        let terms: Vec<Complex64> = u
            .coeffs
            .iter()
            .zip(&v.coeffs)
            .map(|(a, b)| a * b.conj())
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// The isometry U: phi_k -> Phi_{k,p}; the identity on coefficients.
    pub fn transform_u(&self, u: &CoeffVector) -> Result<CoeffVector> {
        if u.side != BasisSide::Sphere {
            return Err(Error::Mismatch("transform_u expects a sphere-side vector".into()));
        }
        Ok(CoeffVector {
            params: u.params,
            side: BasisSide::Holo,
            coeffs: u.coeffs.clone(),
        })
    }

    /// Exact inverse of [`Model::transform_u`].
    pub fn transform_u_inverse(&self, v: &CoeffVector) -> Result<CoeffVector> {
        if v.side != BasisSide::Holo {
            return Err(Error::Mismatch("transform_u_inverse expects a holo-side vector".into()));
        }
        Ok(CoeffVector {
            params: v.params,
            side: BasisSide::Sphere,
            coeffs: v.coeffs.clone(),
        })
    }

    /// Per-coordinate power table z_j^d for d <= l_max; monomial evaluation
    /// over the whole index set then costs O(n) per index.
    pub fn power_table(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        let l = self.params.l_max as usize;
        z.iter()
            .map(|&zj| {
                let mut row = Vec::with_capacity(l + 1);
                row.push(Complex64::new(1.0, 0.0));
                for d in 1..=l {
                    let prev = row[d - 1];
                    row.push(prev * zj);
                }
                row
            })
            .collect()
    }

    fn monomial_from_table(table: &[Vec<Complex64>], k: &MultiIndex) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (j, row) in table.iter().enumerate() {
            acc *= row[k.get(j) as usize];
        }
        acc
    }

    /// Evaluate a sphere-side vector at a unit vector x in C^n.
    pub fn eval_sphere(&self, u: &CoeffVector, x: &[Complex64]) -> Result<Complex64> {
        if u.side != BasisSide::Sphere {
            return Err(Error::Mismatch("eval_sphere expects a sphere-side vector".into()));
        }
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "eval_sphere requires a unit vector, got |x| = {norm}"
            )));
        }
        let table = self.power_table(x);
        let terms: Vec<Complex64> = self
            .index_set
            .iter()
            .zip(&u.coeffs)
            .map(|(k, c)| c * phi_norm_const(k, self.params.n) * Self::monomial_from_table(&table, k))
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Evaluate a holo-side vector at any z in C^n; entire in z.
    pub fn eval_holo(&self, v: &CoeffVector, z: &[Complex64]) -> Result<Complex64> {
        if v.side != BasisSide::Holo {
            return Err(Error::Mismatch("eval_holo expects a holo-side vector".into()));
        }
        let table = self.power_table(z);
        let terms: Vec<Complex64> = self
            .index_set
            .iter()
            .zip(&v.coeffs)
            .map(|(k, c)| c * cap_phi_norm_const(k, &self.params) * Self::monomial_from_table(&table, k))
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Vector of Phi_k(z) over the index set (the holo basis evaluated
    /// pointwise); shared by the coherent-state and Berezin machinery.
    pub fn cap_phi_values(&self, z: &[Complex64]) -> Vec<Complex64> {
        let table = self.power_table(z);
        self.index_set
            .iter()
            .map(|k| cap_phi_norm_const(k, &self.params) * Self::monomial_from_table(&table, k))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::{enp_moment, monomial_sphere_moment};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 0.0, 1.0, 4).is_err());
        assert!(ModelParams::new(2, -2.0, 1.0, 4).is_err());
        assert!(ModelParams::new(2, 0.0, 0.0, 4).is_err());
        assert!(ModelParams::new(2, -1.5, 0.3, 4).is_ok());
    }

    #[test]
    fn phi_norm_constants() {
        let k0 = MultiIndex::zeros(2);
        assert_relative_eq!(phi_norm_const(&k0, 2), 1.0, epsilon = 1e-15);
        // unit-norm condition against the moment 1/2
        let k10 = MultiIndex::new(vec![1, 0]);
        let nc = phi_norm_const(&k10, 2);
        assert_relative_eq!(nc, 2f64.sqrt(), max_relative = 1e-14);
        let m = monomial_sphere_moment(2, &k10, &k10);
        assert_relative_eq!(nc * nc * m, 1.0, max_relative = 1e-13);
        // n = 3, k = (1,1,0): sqrt((3)_2 / 1) = sqrt(12)
        let k110 = MultiIndex::new(vec![1, 1, 0]);
        assert_relative_eq!(phi_norm_const(&k110, 3), 12f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn cap_phi_norm_constants() {
        let params = ModelParams::new(2, 0.0, 1.0, 4).unwrap();
        let k0 = MultiIndex::zeros(2);
        assert_relative_eq!(cap_phi_norm_const(&k0, &params), 1.0, epsilon = 1e-15);
        let k10 = MultiIndex::new(vec![1, 0]);
        assert_relative_eq!(
            cap_phi_norm_const(&k10, &params),
            1.0 / 2f64.sqrt(),
            max_relative = 1e-14
        );
        let params_h = ModelParams::new(2, 0.0, 0.5, 4).unwrap();
        let k20 = MultiIndex::new(vec![2, 0]);
        assert_relative_eq!(
            cap_phi_norm_const(&k20, &params_h),
            4.0 / 12f64.sqrt(),
            max_relative = 1e-13
        );
        // unit norm against the E_{n,p} moment
        let z = [c(0.1, 0.2), c(-0.3, 0.4)];
        let m = enp_moment(&k20, &k20, 0, 0, &z, &z, &params_h).unwrap();
        let nc = cap_phi_norm_const(&k20, &params_h);
        assert_relative_eq!(nc * nc * m.re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gram_matrices_are_identity() {
        // both bases, L = 8, n in {2, 3}: Gram entries from the closed-form
        // moments must be the identity to 1e-12.
        for n in [2usize, 3] {
            let params = ModelParams::new(n, 0.7, 0.8, 8).unwrap();
            let model = Model::new(params);
            for (i, a) in model.index_set.iter().enumerate() {
                for (j, b) in model.index_set.iter().enumerate() {
                    let sphere_gram = phi_norm_const(a, n)
                        * phi_norm_const(b, n)
                        * monomial_sphere_moment(n, a, b);
                    let z = [c(0.2, 0.1), c(0.4, -0.2), c(0.0, 0.3)];
                    let holo_gram = cap_phi_norm_const(a, &params)
                        * cap_phi_norm_const(b, &params)
                        * enp_moment(a, b, 0, 0, &z[..n], &z[..n], &params)
                            .unwrap()
                            .re;
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (sphere_gram - expect).abs() < 1e-12,
                        "sphere gram ({a},{b}) = {sphere_gram}"
                    );
                    assert!(
                        (holo_gram - expect).abs() < 1e-12,
                        "holo gram ({a},{b}) = {holo_gram}"
                    );
                }
            }
        }
    }

    #[test]
    fn transform_u_is_isometry() {
        let params = ModelParams::new(2, 1.0, 0.7, 6).unwrap();
        let model = Model::new(params);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut u = model.zero(BasisSide::Sphere);
            for coeff in u.coeffs.iter_mut() {
                *coeff = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let v = model.transform_u(&u).unwrap();
            assert_eq!(u.norm(), v.norm(), "coefficient identity is exact");
            let back = model.transform_u_inverse(&v).unwrap();
            assert_eq!(back.coeffs, u.coeffs);
        }
        // basis vectors map to basis vectors
        let k = MultiIndex::new(vec![2, 1]);
        let d = model.basis_vector(BasisSide::Sphere, &k).unwrap();
        let ud = model.transform_u(&d).unwrap();
        assert_eq!(ud.side, BasisSide::Holo);
        assert_eq!(ud.coeffs, d.coeffs);
        // zero maps to zero
        let z = model.zero(BasisSide::Sphere);
        assert_eq!(model.transform_u(&z).unwrap().norm(), 0.0);
    }

    #[test]
    fn inner_product_orthonormality() {
        let params = ModelParams::new(2, 0.0, 1.0, 4).unwrap();
        let model = Model::new(params);
        let k0 = MultiIndex::zeros(2);
        let k10 = MultiIndex::new(vec![1, 0]);
        let k01 = MultiIndex::new(vec![0, 1]);
        let d0 = model.basis_vector(BasisSide::Sphere, &k0).unwrap();
        let d10 = model.basis_vector(BasisSide::Sphere, &k10).unwrap();
        let d01 = model.basis_vector(BasisSide::Sphere, &k01).unwrap();
        assert_eq!(model.inner_product(&d0, &d0).unwrap(), c(1.0, 0.0));
        assert_eq!(model.inner_product(&d10, &d01).unwrap(), c(0.0, 0.0));
        let h = model.basis_vector(BasisSide::Holo, &k0).unwrap();
        assert!(model.inner_product(&d0, &h).is_err());
    }

    #[test]
    fn eval_sphere_basics() {
        let params = ModelParams::new(2, 0.0, 1.0, 4).unwrap();
        let model = Model::new(params);
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        let d0 = model.basis_vector(BasisSide::Sphere, &MultiIndex::zeros(2)).unwrap();
        assert_relative_eq!(model.eval_sphere(&d0, &x).unwrap().re, 1.0, epsilon = 1e-14);
        let k10 = MultiIndex::new(vec![1, 0]);
        let d10 = model.basis_vector(BasisSide::Sphere, &k10).unwrap();
        assert_relative_eq!(
            model.eval_sphere(&d10, &x).unwrap().re,
            2f64.sqrt(),
            max_relative = 1e-14
        );
        // linearity spot check
        let mut u = model.zero(BasisSide::Sphere);
        u.coeffs[0] = c(2.0, 1.0);
        let idx = model.index_set.position(&k10).unwrap();
        u.coeffs[idx] = c(0.0, -3.0);
        let lhs = model.eval_sphere(&u, &x).unwrap();
        let rhs = c(2.0, 1.0) * model.eval_sphere(&d0, &x).unwrap()
            + c(0.0, -3.0) * model.eval_sphere(&d10, &x).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        // off-sphere point rejected
        let bad = [c(1.1, 0.0), c(0.0, 0.0)];
        assert!(model.eval_sphere(&d0, &bad).is_err());
    }

    #[test]
    fn eval_holo_basics() {
        let params = ModelParams::new(2, 1.5, 0.7, 4).unwrap();
        let model = Model::new(params);
        let d0 = model.basis_vector(BasisSide::Holo, &MultiIndex::zeros(2)).unwrap();
        let z = [c(0.3, 0.4), c(-1.0, 2.0)];
        assert_relative_eq!(model.eval_holo(&d0, &z).unwrap().re, 1.0, epsilon = 1e-14);
        // delta_{(1,0)} at z = (hbar, 0) evaluates to 1/sqrt((n+p)_1)
        let k10 = MultiIndex::new(vec![1, 0]);
        let d10 = model.basis_vector(BasisSide::Holo, &k10).unwrap();
        let z = [c(params.hbar, 0.0), c(0.0, 0.0)];
        assert_relative_eq!(
            model.eval_holo(&d10, &z).unwrap().re,
            1.0 / (params.n as f64 + params.p).sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn csv_round_shape() {
        let params = ModelParams::new(2, 0.0, 1.0, 1).unwrap();
        let model = Model::new(params);
        let d = model.basis_vector(BasisSide::Sphere, &MultiIndex::new(vec![1, 0])).unwrap();
        let csv = d.to_csv(&model.index_set);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k_1,k_2,re,im");
        assert_eq!(lines.len(), 1 + model.dim());
        assert!(lines[2].starts_with("1,0,"));
    }
}

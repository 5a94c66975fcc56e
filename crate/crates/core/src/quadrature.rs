//! Numerical integration against the measure dm_{n,p}^hbar on C^n and the
//! normalized surface measure on the complex sphere.
//!
//! The radial factor r^(2n-1) (r/hbar)^p K_p(2r/hbar) is integrated by
//! composite Gauss-Legendre panels, geometrically graded towards the origin
//! where K_p is singular for p <= 0. The angular rule uses the coordinates
//! x_j = sqrt(t_j) e^(i phi_j) with t on the simplex and phi on the torus:
//! Gauss-Legendre in the simplex variables and uniform points in each
//! periodic angle, which integrates monomial pairs x^a conj(x)^b exactly by
//! construction (the torus kills a_j != b_j, the simplex part is a
//! polynomial). Rule construction is deterministic; node evaluation is a
//! parallel map with a fixed pairwise reduction order.

use crate::hilbert::ModelParams;
use crate::multiindex::{diagonal_sphere_moment_ln, enumerate_degree, MultiIndex};
use crate::specfun::{bessel_k, ln_pochhammer, log_gamma};
use crate::util::{pairwise_sum, pairwise_sum_f64};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    RadialBesselK,
    SphereProductAngle,
    MonteCarloSphere,
}

#[derive(Clone, Debug)]
pub struct RuleMeta {
    pub n: usize,
    pub p: f64,
    pub hbar: f64,
    /// Radial cutoff in units of hbar (the rule covers [0, cutoff*hbar]).
    pub cutoff: f64,
    pub counts: Vec<usize>,
    pub seed: u64,
}

/// Nodes and positive weights for one of the three rule kinds. Radial nodes
/// are single coordinates [r]; sphere nodes store the unit vector as
/// interleaved [re_1, im_1, ..., re_n, im_n].
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub meta: RuleMeta,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Decode a sphere node back into a complex unit vector.
    pub fn sphere_point(&self, i: usize) -> Vec<Complex64> {
        self.nodes[i]
            .chunks(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect()
    }

    /// CSV dump: node coordinates then the weight.
    pub fn to_csv(&self) -> String {
        let dim = self.nodes.first().map(|v| v.len()).unwrap_or(0);
        let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
        header.push("weight".into());
        let mut out = header.join(",");
        out.push('\n');
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            for v in node {
                out.push_str(&crate::util::fmt_f64(*v));
                out.push(',');
            }
            out.push_str(&crate::util::fmt_f64(*w));
            out.push('\n');
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(m, x);
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Closed-form radial moment: int |z|^(2k) dm = hbar^(2k) (n)_k (n+p)_k.
pub fn radial_moment_closed(params: &ModelParams, k: u32) -> f64 {
    let n = params.n as f64;
    (2.0 * k as f64 * params.hbar.ln()
        + ln_pochhammer(n, k).unwrap()
        + ln_pochhammer(n + params.p, k).unwrap())
    .exp()
}

/// Composite Gauss-Legendre rule for the full radial factor of dm_{n,p}^h,
/// folded with the measure constant and the sphere volume so that
/// sum_i w_i f(r_i) approximates int_{C^n} f(|z|) dm(z).
///
/// The rule is validated against the Mellin moments k = 0..6 before being
/// returned.
pub fn build_radial_rule(params: &ModelParams, cutoff: f64, m: usize) -> Result<QuadratureRule> {
    if m < 8 {
        return Err(Error::Config(format!("radial rule needs m >= 8 nodes, got {m}")));
    }
    if cutoff < 10.0 {
        return Err(Error::Config(format!(
            "radial cutoff must be at least 10 hbar, got {cutoff}"
        )));
    }
    let n = params.n as f64;
    let r_max = cutoff * params.hbar;
    // ln of 4 / (Gamma(n+p) Gamma(n) hbar^(2n)): the measure constant times
    // the (2 pi^n / Gamma(n)) sphere volume, over (pi hbar^2)^n.
    let ln_const = 4f64.ln()
        - log_gamma(n + params.p)?
        - log_gamma(n)?
        - 2.0 * n * params.hbar.ln();
    // Geometrically graded panels toward r = 0.
    let panels = (m / 16).clamp(6, 24);
    let per_panel = (m + panels - 1) / panels;
    let mut breaks = Vec::with_capacity(panels + 1);
    for j in 0..panels {
        breaks.push(r_max * 0.5f64.powi((panels - j) as i32));
    }
    breaks.insert(0, 0.0);
    breaks.push(r_max);
    let (gl_x, gl_w) = gauss_legendre(per_panel);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &w) in gl_x.iter().zip(&gl_w) {
            let r = mid + half * x;
            let kp = bessel_k(params.p, 2.0 * r / params.hbar)?.value.re;
            let ln_weight = ln_const
                + (2.0 * n - 1.0) * r.ln()
                + params.p * (r.ln() - params.hbar.ln());
            let weight = w * half * ln_weight.exp() * kp;
            nodes.push(vec![r]);
            weights.push(weight);
        }
    }
    let rule = QuadratureRule {
        kind: RuleKind::RadialBesselK,
        nodes,
        weights,
        meta: RuleMeta {
            n: params.n,
            p: params.p,
            hbar: params.hbar,
            cutoff,
            counts: vec![panels + 1, per_panel],
            seed: 0,
        },
    };
    // Moment validation before handing the rule out.
    for k in 0..=6u32 {
        let closed = radial_moment_closed(params, k);
        let observed = pairwise_sum_f64(
            &rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(node, w)| w * node[0].powi(2 * k as i32))
                .collect::<Vec<_>>(),
        );
        let rel = (observed - closed).abs() / closed;
        if rel > 1e-8 {
            return Err(Error::Quadrature(format!(
                "radial moment k={k} off by {rel:.3e} (closed {closed:.6e}, rule {observed:.6e}) \
                 at n={}, p={}, hbar={}, cutoff={cutoff}, m={m}",
                params.n, params.p, params.hbar
            )));
        }
    }
    Ok(rule)
}

/// Angular orders of the sphere product rule: Gauss-Legendre counts in the
/// simplex variables and the uniform count per periodic angle.
#[derive(Clone, Copy, Debug)]
pub struct SphereOrders {
    pub simplex: usize,
    pub torus: usize,
}

impl SphereOrders {
    /// Smallest orders that integrate all pairs x^a conj(x)^b with
    /// |a|, |b| <= l_exact exactly.
    pub fn for_degree(l_exact: u32) -> Self {
        SphereOrders {
            simplex: (l_exact as usize / 2) + 1,
            torus: 2 * l_exact as usize + 1,
        }
    }
}

/// Product rule on the unit sphere of C^n (n = 2 or 3) integrating the
/// normalized measure: sum of weights is 1 and monomial pairs with
/// |a|, |b| <= l_exact are integrated exactly.
pub fn build_sphere_rule(n: usize, orders: SphereOrders, l_exact: u32) -> Result<QuadratureRule> {
    if !(n == 2 || n == 3) {
        return Err(Error::Config(format!("sphere rule supports n in {{2,3}}, got {n}")));
    }
    if orders.simplex < (l_exact as usize / 2) + 1 || orders.torus < 2 * l_exact as usize + 1 {
        return Err(Error::Config(format!(
            "sphere orders {orders:?} too low for exactness degree {l_exact}"
        )));
    }
    let (gl_x, gl_w) = gauss_legendre(orders.simplex);
    // map [-1,1] -> [0,1]
    let tx: Vec<f64> = gl_x.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let tw: Vec<f64> = gl_w.iter().map(|w| 0.5 * w).collect();
    let nphi = orders.torus;
    let phis: Vec<f64> = (0..nphi)
        .map(|q| 2.0 * std::f64::consts::PI * q as f64 / nphi as f64)
        .collect();
    let phi_w = 1.0 / nphi as f64;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match n {
        2 => {
            // t1 = t, t2 = 1 - t with uniform density on [0,1]
            for (&t, &wt) in tx.iter().zip(&tw) {
                let amp = [t.sqrt(), (1.0 - t).sqrt()];
                for &phi1 in &phis {
                    for &phi2 in &phis {
                        let x = [
                            Complex64::from_polar(amp[0], phi1),
                            Complex64::from_polar(amp[1], phi2),
                        ];
                        nodes.push(vec![x[0].re, x[0].im, x[1].re, x[1].im]);
                        weights.push(wt * phi_w * phi_w);
                    }
                }
            }
        }
        3 => {
            // t1 = u, t2 = (1-u)v, t3 = (1-u)(1-v); density 2(1-u) du dv
            for (&u, &wu) in tx.iter().zip(&tw) {
                for (&v, &wv) in tx.iter().zip(&tw) {
                    let t = [u, (1.0 - u) * v, (1.0 - u) * (1.0 - v)];
                    let jac = 2.0 * (1.0 - u);
                    let amp = [t[0].sqrt(), t[1].sqrt(), t[2].sqrt()];
                    for &phi1 in &phis {
                        for &phi2 in &phis {
                            for &phi3 in &phis {
                                let x = [
                                    Complex64::from_polar(amp[0], phi1),
                                    Complex64::from_polar(amp[1], phi2),
                                    Complex64::from_polar(amp[2], phi3),
                                ];
                                nodes.push(vec![
                                    x[0].re, x[0].im, x[1].re, x[1].im, x[2].re, x[2].im,
                                ]);
                                weights.push(wu * wv * jac * phi_w.powi(3));
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    let rule = QuadratureRule {
        kind: RuleKind::SphereProductAngle,
        nodes,
        weights,
        meta: RuleMeta {
            n,
            p: 0.0,
            hbar: 1.0,
            cutoff: 0.0,
            counts: vec![orders.simplex, orders.torus],
            seed: 0,
        },
    };
    // Exactness verification. The torus factor sends every pair with
    // a_j != b_j for some j to ~0 by construction (frequencies are below the
    // point count), so the diagonal pairs carry the real content; a few
    // off-diagonal pairs are still spot-checked numerically.
    let total: f64 = pairwise_sum_f64(&rule.weights);
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Quadrature(format!(
            "sphere rule mass {total} differs from 1"
        )));
    }
    for deg in 0..=l_exact {
        for a in enumerate_degree(n, deg) {
            let closed = diagonal_sphere_moment_ln(n, &a).exp();
            let observed = integrate_sphere(
                |x| {
                    let m = a.monomial(x);
                    m * m.conj()
                },
                &rule,
            );
            if (observed.re - closed).abs() > 1e-10 * closed.max(1.0) || observed.im.abs() > 1e-12
            {
                return Err(Error::Quadrature(format!(
                    "sphere rule misses diagonal moment of {a}: {} vs {closed}",
                    observed.re
                )));
            }
        }
    }
    let offdiag: &[(&[u32], &[u32])] = if n == 2 {
        &[
            (&[1, 0], &[0, 1]),
            (&[2, 1], &[1, 2]),
            (&[3, 0], &[1, 2]),
        ]
    } else {
        &[
            (&[1, 0, 0], &[0, 1, 0]),
            (&[1, 1, 0], &[0, 1, 1]),
            (&[2, 0, 1], &[1, 1, 1]),
        ]
    };
    for (pa, pb) in offdiag {
        if pa.iter().sum::<u32>() > l_exact {
            continue;
        }
        let a = MultiIndex::new(pa.to_vec());
        let b = MultiIndex::new(pb.to_vec());
        let observed = integrate_sphere(|x| a.monomial(x) * b.monomial(x).conj(), &rule);
        if observed.norm() > 1e-12 {
            return Err(Error::Quadrature(format!(
                "sphere rule fails orthogonality of {a} vs {b}: |{observed}|"
            )));
        }
    }
    Ok(rule)
}

/// Weighted sum of f over a sphere rule; parallel map over nodes with a
/// fixed pairwise reduction order (bit-identical across thread counts).
pub fn integrate_sphere<F>(f: F, rule: &QuadratureRule) -> Complex64
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    debug_assert_eq!(rule.kind, RuleKind::SphereProductAngle);
    let values: Vec<Complex64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(node, w)| {
            let x: Vec<Complex64> = node.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            f(&x) * *w
        })
        .collect();
    pairwise_sum(&values)
}

/// Integral over C^n against dm_{n,p}^hbar as the product of the radial rule
/// (which carries all measure constants) and the normalized sphere rule.
pub fn integrate_cn<F>(f: F, radial: &QuadratureRule, sphere: &QuadratureRule) -> Complex64
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    debug_assert_eq!(radial.kind, RuleKind::RadialBesselK);
    debug_assert_eq!(sphere.kind, RuleKind::SphereProductAngle);
    let shell_values: Vec<Complex64> = radial
        .nodes
        .par_iter()
        .zip(radial.weights.par_iter())
        .map(|(rnode, rw)| {
            let r = rnode[0];
            let inner: Vec<Complex64> = sphere
                .nodes
                .iter()
                .zip(&sphere.weights)
                .map(|(snode, sw)| {
                    let z: Vec<Complex64> = snode
                        .chunks(2)
                        .map(|c| Complex64::new(r * c[0], r * c[1]))
                        .collect();
                    f(&z) * *sw
                })
                .collect();
            pairwise_sum(&inner) * *rw
        })
        .collect();
    pairwise_sum(&shell_values)
}

/// Monte Carlo estimate of int f dS over the unit sphere of C^n via
/// normalized Gaussian 2n-vectors. Returns (mean, standard error);
/// bit-reproducible for a fixed seed.
pub fn mc_sphere<F>(f: F, n: usize, samples: usize, seed: u64) -> Result<(Complex64, f64)>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    if samples < 1000 {
        return Err(Error::Config(format!(
            "mc_sphere needs at least 1000 samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0f64;
    let mut point = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..samples {
        // Box-Muller pairs fill the 2n Gaussian coordinates.
        let mut norm_sq = 0.0;
        for slot in point.iter_mut() {
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            let mag = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
            let g = Complex64::new(mag * c, mag * s);
            norm_sq += g.norm_sqr();
            *slot = g;
        }
        let inv = 1.0 / norm_sq.sqrt();
        for slot in point.iter_mut() {
            *slot *= inv;
        }
        let v = f(&point);
        sum += v;
        sum_sq += v.norm_sqr();
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean.norm_sqr()).max(0.0);
    let stderr = (var / samples as f64).sqrt();
    Ok((mean, stderr))
}

/// Random special-orthogonal matrix by Gram-Schmidt on a Gaussian matrix
/// with the determinant sign fixed; used for the rotation-invariance checks.
pub fn random_so_n(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let u1: f64 = rng.gen::<f64>().max(1e-300);
                        let u2: f64 = rng.gen();
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                    })
                    .collect()
            })
            .collect();
        let mut ok = true;
        for i in 0..n {
            for j in 0..i {
                let dot: f64 = (0..n).map(|r| cols[i][r] * cols[j][r]).sum();
                for r in 0..n {
                    cols[i][r] -= dot * cols[j][r];
                }
            }
            let norm: f64 = (0..n).map(|r| cols[i][r] * cols[i][r]).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for r in 0..n {
                cols[i][r] /= norm;
            }
        }
        if !ok {
            continue;
        }
        // determinant via Laplace for n <= 3
        let det = match n {
            2 => cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1],
            3 => {
                cols[0][0] * (cols[1][1] * cols[2][2] - cols[2][1] * cols[1][2])
                    - cols[1][0] * (cols[0][1] * cols[2][2] - cols[2][1] * cols[0][2])
                    + cols[2][0] * (cols[0][1] * cols[1][2] - cols[1][1] * cols[0][2])
            }
            _ => 1.0,
        };
        if det < 0.0 {
            for r in 0..n {
                cols[0][r] = -cols[0][r];
            }
        }
        // return as row-major matrix acting by M[i][j]
        let mut rows = vec![vec![0.0; n]; n];
        for (i, col) in cols.iter().enumerate() {
            for (j, &v) in col.iter().enumerate() {
                rows[j][i] = v;
            }
        }
        return rows;
    }
}

/// T_R(z) = R Re(z) + i R Im(z), the rotation action on C^n.
pub fn rotate_cn(rot: &[Vec<f64>], z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    (0..n)
        .map(|i| {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..n {
                re += rot[i][j] * z[j].re;
                im += rot[i][j] * z[j].im;
            }
            Complex64::new(re, im)
        })
        .collect()
}

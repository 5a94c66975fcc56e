//! Double-double ("two-float") arithmetic used inside cancellation-prone
//! power series. Hypergeometric sums of the kernel family lose up to
//! `2|Im sqrt(zeta)|/ln 10` digits near the negative real axis; accumulating
//! the recurrence in ~32 significant digits keeps the delivered f64 result at
//! full precision there.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    #[inline]
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        let e = e + self.lo * x;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, x: f64) -> Dd {
        let q1 = self.hi / x;
        let (p, e) = two_prod(q1, x);
        let r = ((self.hi - p) - e + self.lo) / x;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.hi.abs()
    }
}

/// Complex number with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    #[inline]
    pub fn from(z: Complex64) -> Self {
        Cdd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    #[inline]
    pub fn one() -> Self {
        Cdd {
            re: Dd::from(1.0),
            im: Dd::from(0.0),
        }
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, other: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(other.re),
            im: self.im.add(other.im),
        }
    }

    #[inline]
    pub fn mul(self, other: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(other.re).sub(self.im.mul(other.im)),
            im: self.re.mul(other.im).add(self.im.mul(other.re)),
        }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Cdd {
        Cdd {
            re: self.re.mul_f64(x),
            im: self.im.mul_f64(x),
        }
    }

    #[inline]
    pub fn div_f64(self, x: f64) -> Cdd {
        Cdd {
            re: self.re.div_f64(x),
            im: self.im.div_f64(x),
        }
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_complex().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_recovers_cancelled_digits() {
        // (1 + 1e-20) - 1 is unrepresentable in f64 but exact in dd.
        let a = Dd::from(1.0).add(Dd {
            hi: 1e-20,
            lo: 0.0,
        });
        let d = a.sub(Dd::from(1.0));
        assert_eq!(d.to_f64(), 1e-20);
    }

    #[test]
    fn dd_product_carries_exact_error_term() {
        let x = 1.0 + 2f64.powi(-30);
        let p = Dd::from(x).mul(Dd::from(x));
        // x^2 = 1 + 2^-29 + 2^-60 exactly.
        let exact_hi = 1.0 + 2f64.powi(-29);
        assert_eq!(p.hi, exact_hi);
        assert_eq!(p.lo, 2f64.powi(-60));
    }

    #[test]
    fn cdd_matches_complex_mul() {
        let z = Complex64::new(0.3, -1.7);
        let w = Complex64::new(-2.1, 0.9);
        let p = Cdd::from(z).mul(Cdd::from(w)).to_complex();
        let q = z * w;
        assert!((p - q).norm() < 1e-15 * q.norm());
    }
}

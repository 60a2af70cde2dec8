use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real polynomial in `s`, coefficients stored in ascending powers.
///
/// Trailing (highest power) zeros are trimmed, so the zero polynomial is the
/// empty coefficient list and `degree()` is `None` for it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    /// Build from ascending coefficients, trimming trailing zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Build from descending coefficients, the way equations are usually written.
    pub fn from_descending(desc: &[f64]) -> Self {
        Self::new(desc.iter().rev().copied().collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c * s^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Self::new(v)
    }

    /// Monic real polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; the imaginary residue of the product is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Divide through by the leading coefficient.
    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            Some(&lead) => self.scale(1.0 / lead),
            None => Self::zero(),
        }
    }

    /// Multiply by `s^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![0.0; k];
        v.extend_from_slice(&self.coeffs);
        Self { coeffs: v }
    }

    /// `p(-s)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum of |c_k| |z|^k: the natural scale for a backward residual at `z`.
    pub fn abs_eval(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Infinity norm of the coefficient vector.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Polynomial long division: `self = q * d + r`, `deg r < deg d`.
    ///
    /// Panics on a zero divisor.
    pub fn div_rem(&self, d: &Polynomial) -> (Polynomial, Polynomial) {
        let dd = d.degree().expect("division by the zero polynomial");
        let Some(nd) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if nd < dd {
            return (Self::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut q = vec![0.0; nd - dd + 1];
        let lead = d.leading();
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd] / lead;
            q[k] = c;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                rem[k + j] -= c * dj;
            }
            // the cancelled term is exactly zero by construction
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        (Self::new(q), Self::new(rem))
    }
}

/// Exact convolution of coefficient sequences.
pub fn poly_mul(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() || b.is_zero() {
        return Polynomial::zero();
    }
    let mut out = vec![0.0; a.coeffs.len() + b.coeffs.len() - 1];
    for (i, &x) in a.coeffs.iter().enumerate() {
        for (j, &y) in b.coeffs.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Polynomial::new(out)
}

fn zip_with(a: &Polynomial, b: &Polynomial, f: impl Fn(f64, f64) -> f64) -> Polynomial {
    let n = a.coeffs.len().max(b.coeffs.len());
    Polynomial::new((0..n).map(|k| f(a.coeff(k), b.coeff(k))).collect())
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        poly_mul(self, rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Descending order with explicit powers, e.g. `s^2 + 3 s + 2`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let mag = c.abs();
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            }
            first = false;
            let show_mag = k == 0 || mag != 1.0;
            if show_mag {
                write!(f, "{mag}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "{}s", if show_mag { " " } else { "" })?,
                _ => write!(f, "{}s^{k}", if show_mag { " " } else { "" })?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn trims_and_degrees() {
        assert_eq!(p(&[1.0, 2.0, 0.0, 0.0]).degree(), Some(1));
        assert!(p(&[0.0, 0.0]).is_zero());
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn mul_small_cases() {
        assert_eq!(&p(&[1.0, 1.0]) * &p(&[2.0, 1.0]), p(&[2.0, 3.0, 1.0]));
        assert!((&p(&[1.0, 5.0]) * &Polynomial::zero()).is_zero());
        let a = p(&[1.0, 2.0, 1.0]);
        let b = p(&[4.0, 4.0, 1.0]);
        assert_eq!(
            &a * &(&b * &b),
            Polynomial::from_descending(&[1.0, 10.0, 41.0, 88.0, 104.0, 64.0, 16.0])
        );
    }

    #[test]
    fn div_rem_reconstructs() {
        let n = p(&[2.0, 1.0]);
        let d = p(&[1.0, 1.0]);
        let (q, r) = n.div_rem(&d);
        assert_eq!(q, p(&[1.0]));
        assert_eq!(r, p(&[1.0]));

        let n = p(&[3.0, -1.0, 4.0, 1.0, 5.0]);
        let d = p(&[2.0, 7.0, 1.0]);
        let (q, r) = n.div_rem(&d);
        let back = &(&q * &d) + &r;
        for k in 0..5 {
            assert!((back.coeff(k) - n.coeff(k)).abs() < 1e-12);
        }
        assert!(r.degree().unwrap_or(0) < 2);
    }

    #[test]
    fn reflect_and_eval() {
        let a = p(&[1.0, 2.0, 3.0]);
        assert_eq!(a.reflect(), p(&[1.0, -2.0, 3.0]));
        assert_eq!(a.eval(2.0), 17.0);
        assert_eq!(a.derivative(), p(&[2.0, 6.0]));
        assert_eq!(a.shift(2), p(&[0.0, 0.0, 1.0, 2.0, 3.0]));
    }

    #[test]
    fn display_is_descending() {
        assert_eq!(p(&[2.0, 3.0, 1.0]).to_string(), "s^2 + 3 s + 2");
        assert_eq!(
            p(&[120.0, -60.0, 12.0, -1.0]).to_string(),
            "-s^3 + 12 s^2 - 60 s + 120"
        );
        assert_eq!(Polynomial::zero().to_string(), "0");
    }

    #[test]
    fn from_roots_pairs() {
        let r = [Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0)];
        assert_eq!(Polynomial::from_roots(&r), p(&[5.0, 2.0, 1.0]));
    }
}

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{roots, Polynomial};
use crate::error::{Error, Result};

/// `num(s) / den(s)`, kept exactly as built. No common factors are ever
/// cancelled, so hidden modes stay visible to stability checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput(
                "transfer function with zero denominator".into(),
            ));
        }
        Ok(Self { num, den })
    }

    /// Shorthand from ascending coefficient slices. Panics on a zero denominator,
    /// so it is meant for literals.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Self {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
            .expect("literal transfer function with zero denominator")
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coeffs(&[c], &[1.0])
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn num_degree(&self) -> Option<usize> {
        self.num.degree()
    }

    pub fn den_degree(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    /// `deg den - deg num`; positive means strictly proper. `None` for a zero numerator.
    pub fn relative_degree(&self) -> Option<isize> {
        self.num
            .degree()
            .map(|dn| self.den_degree() as isize - dn as isize)
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 0)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r > 0)
    }

    /// Value at a complex point; no check for poles.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den_degree() == 0 {
            return Ok(Vec::new());
        }
        roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        match self.num.degree() {
            None | Some(0) => Ok(Vec::new()),
            _ => roots(&self.num),
        }
    }

    /// Series connection, `self * other`, unreduced.
    pub fn series(&self, other: &RationalTF) -> RationalTF {
        RationalTF {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn scale(&self, c: f64) -> RationalTF {
        RationalTF {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Divide by `s` (append an integrator).
    pub fn integrate(&self) -> RationalTF {
        RationalTF {
            num: self.num.clone(),
            den: self.den.shift(1),
        }
    }
}

/// `num(jw)/den(jw) * exp(-j w delay)`, with the delay applied exactly.
pub fn freq_response(sys: &RationalTF, delay: f64, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidInput(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    if delay < 0.0 || !delay.is_finite() {
        return Err(Error::InvalidInput(format!(
            "delay must be non-negative, got {delay}"
        )));
    }
    let s = Complex64::new(0.0, omega);
    let d = sys.den.eval_complex(s);
    if d.norm() <= 1e-14 * sys.den.abs_eval(omega) {
        return Err(Error::PoleOnAxis { omega });
    }
    let rot = Complex64::from_polar(1.0, -omega * delay);
    Ok(sys.num.eval_complex(s) / d * rot)
}

/// Unity negative feedback around `forward`: `num / (den + num)`.
pub fn feedback_unity(forward: &RationalTF) -> Result<RationalTF> {
    let den = &forward.den + &forward.num;
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    Ok(RationalTF {
        num: forward.num.clone(),
        den,
    })
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

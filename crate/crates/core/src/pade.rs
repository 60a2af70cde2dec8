//! Diagonal Pade approximants of the delay `exp(-L s)`.

use crate::error::{Error, Result};
use crate::polytf::{Polynomial, RationalTF};

pub const MAX_ORDER: usize = 12;

/// `c_k = (2r-k)! / (k! (r-k)!)` for `k = 0..=r`, computed exactly.
pub fn pade_coefficients(r: usize) -> Result<Vec<u128>> {
    check_order(r)?;
    let fact = |n: usize| (1..=n as u128).product::<u128>();
    Ok((0..=r)
        .map(|k| fact(2 * r - k) / (fact(k) * fact(r - k)))
        .collect())
}

fn check_order(r: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&r) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange {
            order: r,
            min: 1,
            max: MAX_ORDER,
        })
    }
}

/// Order-`r` approximant `sum c_k (-L s)^k / sum c_k (L s)^k`.
pub fn pade_tf(r: usize, delay: f64) -> Result<RationalTF> {
    let c = pade_coefficients(r)?;
    if !(delay > 0.0) || !delay.is_finite() {
        return Err(Error::InvalidInput(format!(
            "delay must be positive, got {delay}"
        )));
    }
    let mut num = Vec::with_capacity(r + 1);
    let mut den = Vec::with_capacity(r + 1);
    let mut lk = 1.0;
    for (k, &ck) in c.iter().enumerate() {
        let v = ck as f64 * lk;
        den.push(v);
        num.push(if k % 2 == 1 { -v } else { v });
        lk *= delay;
    }
    RationalTF::new(Polynomial::new(num), Polynomial::new(den))
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::placement::STABILITY_MARGIN;
use crate::polytf::{realize, RationalTF};

/// Required relative agreement between the quadrature and Lyapunov H2 values.
pub const H2_AGREEMENT: f64 = 1e-6;

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

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 || (b - a).abs() <= 1e-14 * a.abs().max(b.abs()) {
        return v;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// Magnitudes of nonzero poles and zeros, sorted. Used to place breakpoints
/// and frequency bands.
fn corner_frequencies(h: &RationalTF) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = h
        .poles()?
        .into_iter()
        .chain(h.zeros()?)
        .map(|z| z.norm())
        .filter(|&m| m > 1e-12)
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * *b);
    Ok(v)
}

/// Fails with the offending poles when any has real part at or above the margin.
pub fn require_stable(h: &RationalTF) -> Result<()> {
    let poles = h.poles()?;
    let bad: Vec<Complex64> = poles
        .iter()
        .copied()
        .filter(|p| !(p.re < STABILITY_MARGIN))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Unstable { poles: bad })
    }
}

/// `(1/pi) * integral over [0, inf) of |H(jw)|^2 dw`, squared-rooted.
///
/// The range is split into `[0, a]` on a linear scale, `[a, b]` on a log scale
/// with breakpoints at every pole and zero magnitude, and `[b, inf)` mapped to
/// `u in (0, 1]` by `w = b/u`. The substitution makes the tail integral exact
/// rather than an asymptotic estimate.
pub fn h2_quadrature(h: &RationalTF) -> Result<f64> {
    if !h.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    if h.num().is_zero() {
        return Ok(0.0);
    }
    let corners = corner_frequencies(h)?;
    let (lo, hi) = match (corners.first(), corners.last()) {
        (Some(&l), Some(&u)) => (l * 0.1, u * 10.0),
        _ => (0.1, 10.0),
    };
    let mag2 = |w: f64| h.eval(Complex64::new(0.0, w)).norm_sqr();
    let f_lin = |w: f64| mag2(w);
    let f_log = |x: f64| {
        let w = x.exp();
        mag2(w) * w
    };
    let f_tail = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        mag2(hi / u) * hi / (u * u)
    };
    let mut cuts = vec![lo.ln()];
    cuts.extend(corners.iter().map(|c| c.ln()));
    cuts.push(hi.ln());

    // rough pass to set an absolute tolerance
    let mut rough = gk15(&f_lin, 0.0, lo).0 + gk15(&f_tail, 0.0, 1.0).0;
    for w in cuts.windows(2) {
        rough += gk15(&f_log, w[0], w[1]).0;
    }
    let tol = 1e-13 * rough.abs().max(f64::MIN_POSITIVE);
    let pieces = cuts.len() as f64 + 1.0;
    let mut total = adaptive(&f_lin, 0.0, lo, tol / pieces, 50);
    for w in cuts.windows(2) {
        total += adaptive(&f_log, w[0], w[1], tol / pieces, 50);
    }
    total += adaptive(&f_tail, 0.0, 1.0, tol / pieces, 50);
    Ok((total / std::f64::consts::PI).sqrt())
}

/// `sqrt(C P C^T)` with `A P + P A^T + B B^T = 0`, solved as a Kronecker system.
pub fn h2_lyapunov(h: &RationalTF) -> Result<f64> {
    if !h.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let ss = realize(h)?;
    let n = ss.order();
    if n == 0 || h.num().is_zero() {
        return Ok(0.0);
    }
    let nn = n * n;
    let mut m = DMatrix::<f64>::zeros(nn, nn);
    // column-major vec: vec(A P) = (I kron A) vec P, vec(P A^T) = (A kron I) vec P
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                m[(row, j * n + k)] += ss.a[(i, k)];
                m[(row, k * n + i)] += ss.a[(j, k)];
            }
        }
    }
    let rhs = DVector::from_fn(nn, |r, _| -ss.b[r % n] * ss.b[r / n]);
    let p = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov system".into()))?;
    let mut v = 0.0;
    for j in 0..n {
        for i in 0..n {
            v += ss.c[i] * p[j * n + i] * ss.c[j];
        }
    }
    if v < 0.0 {
        return Err(Error::Numerical(format!("negative Lyapunov H2 square {v}")));
    }
    Ok(v.sqrt())
}

/// H2 norm of a stable strictly proper `H`. The delay is all-pass on the
/// imaginary axis and leaves the value unchanged.
///
/// Returns the quadrature value after checking it against the Lyapunov value.
pub fn h2_norm(h: &RationalTF, delay: f64) -> Result<f64> {
    if delay < 0.0 {
        return Err(Error::InvalidInput(format!("negative delay {delay}")));
    }
    if !h.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    require_stable(h)?;
    let q = h2_quadrature(h)?;
    let l = h2_lyapunov(h)?;
    if (q - l).abs() > H2_AGREEMENT * q.abs().max(l.abs()) {
        return Err(Error::Numerical(format!(
            "H2 quadrature {q} and Lyapunov {l} disagree"
        )));
    }
    Ok(q)
}

/// Peak gain and the frequency where it occurs (0 for DC, infinity for the
/// high-frequency limit).
pub fn hinf_peak(h: &RationalTF) -> Result<(f64, f64)> {
    if !h.is_proper() {
        return Err(Error::Improper {
            excess: (-h.relative_degree().unwrap_or(0)) as usize,
        });
    }
    require_stable(h)?;
    if h.num().is_zero() {
        return Ok((0.0, 0.0));
    }
    let mag = |w: f64| h.eval(Complex64::new(0.0, w)).norm();
    let mut best = (mag(0.0), 0.0);
    if h.relative_degree() == Some(0) {
        let hf = (h.num().leading() / h.den().leading()).abs();
        if hf > best.0 {
            best = (hf, f64::INFINITY);
        }
    }
    let corners = corner_frequencies(h)?;
    let (lo, hi) = match (corners.first(), corners.last()) {
        (Some(&l), Some(&u)) => (l * 1e-4, u * 1e4),
        _ => return Ok(best),
    };
    let decades = (hi / lo).log10();
    let n = ((50.0 * decades).ceil() as usize).max(2000);
    let grid: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&w| mag(w)).collect();
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let mut grid_best = (vmax, grid[imax]);
    // golden-section refinement on log frequency between the neighbours
    let mut a = grid[imax.saturating_sub(1)].ln();
    let mut b = grid[(imax + 1).min(n - 1)].ln();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = mag(x1.exp());
    let mut f2 = mag(x2.exp());
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = mag(x1.exp());
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = mag(x2.exp());
        }
    }
    for (f, x) in [(f1, x1), (f2, x2)] {
        if f > grid_best.0 {
            grid_best = (f, x.exp());
        }
    }
    if grid_best.0 > best.0 {
        best = grid_best;
    }
    Ok(best)
}

/// Peak of `|H(jw)|` over all frequencies.
pub fn hinf_norm(h: &RationalTF, delay: f64) -> Result<f64> {
    if delay < 0.0 {
        return Err(Error::InvalidInput(format!("negative delay {delay}")));
    }
    hinf_peak(h).map(|p| p.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_family() {
        for a in [0.5, 1.0, 2.0, 10.0] {
            let h = RationalTF::from_coeffs(&[1.0], &[a, 1.0]);
            let want = 1.0 / (2.0 * a).sqrt();
            assert!((h2_norm(&h, 0.0).unwrap() - want).abs() < 1e-9);
            assert!((h2_norm(&h, 3.0).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn unstable_and_improper_rejected() {
        let h = RationalTF::from_coeffs(&[1.0], &[-1.0, 1.0]);
        assert!(matches!(h2_norm(&h, 0.0), Err(Error::Unstable { .. })));
        assert!(matches!(hinf_norm(&h, 0.0), Err(Error::Unstable { .. })));
        let h = RationalTF::from_coeffs(&[1.0], &[0.0, 1.0]);
        assert!(matches!(h2_norm(&h, 0.0), Err(Error::Unstable { .. })));
        let h = RationalTF::from_coeffs(&[1.0, 1.0], &[1.0, 1.0]);
        assert!(matches!(h2_norm(&h, 0.0), Err(Error::NotStrictlyProper)));
    }

    #[test]
    fn hinf_examples() {
        let h = RationalTF::from_coeffs(&[1.0], &[1.0, 1.0]);
        assert!((hinf_norm(&h, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let h = RationalTF::from_coeffs(&[4.0], &[4.0, 2.0, 1.0]);
        let want = 1.0 / (2.0 * 0.5 * (0.75f64).sqrt());
        assert!((hinf_norm(&h, 0.0).unwrap() - want).abs() < 1e-6 * want);
        assert_eq!(hinf_norm(&RationalTF::constant(1.0), 2.0).unwrap(), 1.0);
    }

    #[test]
    fn lyapunov_second_order() {
        // 1/(s^2 + 2 z w s + w^2) has H2^2 = 1/(4 z w^3)
        let (z, w) = (0.3, 2.0);
        let h = RationalTF::from_coeffs(&[1.0], &[w * w, 2.0 * z * w, 1.0]);
        let want = (1.0 / (4.0 * z * w * w * w)).sqrt();
        assert!((h2_lyapunov(&h).unwrap() - want).abs() < 1e-12);
        assert!((h2_quadrature(&h).unwrap() - want).abs() < 1e-9);
    }
}

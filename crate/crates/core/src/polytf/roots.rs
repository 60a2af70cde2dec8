use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Polynomial;
use crate::error::{Error, Result};

/// Acceptance bound on the relative backward residual
/// `|p(z)| / sum_k |c_k| |z|^k` of every returned root.
pub const ROOT_RESIDUAL_BOUND: f64 = 1e-8;

/// All roots of `p` (with multiplicity) as eigenvalues of its balanced
/// companion matrix.
pub fn roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = match p.degree() {
        None => return Err(Error::InvalidInput("roots of the zero polynomial".into())),
        Some(0) => return Err(Error::InvalidInput("roots of a constant polynomial".into())),
        Some(n) => n,
    };
    if p.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical(format!("non-finite coefficient in {p}")));
    }
    // exact zero roots come off the bottom before any floating-point work
    let zeros = p.coeffs().iter().take_while(|&&c| c == 0.0).count();
    if zeros > 0 {
        let rest = Polynomial::new(p.coeffs()[zeros..].to_vec());
        let mut out = vec![Complex64::new(0.0, 0.0); zeros];
        if zeros < n {
            out.extend(roots(&rest)?);
        }
        return Ok(out);
    }
    let c = p.coeffs();
    let lead = p.leading();
    if n == 1 {
        return Ok(vec![Complex64::new(-c[0] / lead, 0.0)]);
    }

    // Upper Hessenberg companion form: first row holds -c_{n-1-j}/c_n.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -c[n - 1 - j] / lead;
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    balance(&mut a);

    let eig = a.complex_eigenvalues();
    let out: Vec<Complex64> = eig.iter().copied().collect();
    for z in &out {
        let scale = p.abs_eval(z.norm());
        let resid = p.eval_complex(*z).norm();
        if !(resid <= ROOT_RESIDUAL_BOUND * scale) {
            return Err(Error::Numerical(format!(
                "root {z} of {p} has relative residual {:.3e}",
                resid / scale
            )));
        }
    }
    Ok(out)
}

/// Relative distance below which [`cluster_roots`] merges roots.
///
/// A root of multiplicity `k` is perturbed by roughly `eps^(1/k)` in double
/// precision, about 5e-3 for `k = 6`, so the linkage radius must exceed that.
pub const CLUSTER_LINK_RADIUS: f64 = 2e-2;

/// Replaces each group of near-coincident roots by the group mean, for display.
///
/// Groups are single-linkage components under
/// `|a - b| <= CLUSTER_LINK_RADIUS * max(1, |a|, |b|)`. The mean of a perturbed
/// multiple root is accurate to first order even when the members are not.
/// Stability decisions never use this; they see the raw eigenvalues.
pub fn cluster_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (roots[i], roots[j]);
            let scale = 1f64.max(a.norm()).max(b.norm());
            if (a - b).norm() <= CLUSTER_LINK_RADIUS * scale {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let groups: Vec<usize> = (0..n).map(|i| find(&mut label, i)).collect();
    (0..n)
        .map(|i| {
            let members: Vec<Complex64> = (0..n)
                .filter(|&j| groups[j] == groups[i])
                .map(|j| roots[j])
                .collect();
            members.iter().sum::<Complex64>() / members.len() as f64
        })
        .collect()
}

/// Largest real part, or `None` for an empty list.
pub fn max_real_part(roots: &[Complex64]) -> Option<f64> {
    roots.iter().map(|z| z.re).reduce(f64::max)
}

/// Parlett-Reinsch diagonal similarity scaling by powers of two, which keeps
/// eigenvalues exact while equalizing row and column norms.
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

//! Polynomial regression tuning rules from `(L/T, zeta_ol)` to PID gains.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::placement::PidGains;
use crate::plant::SoptdModel;

/// What each regression predicts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regressand {
    /// The gain itself.
    #[default]
    Raw,
    /// `K * gain`; predictions are divided by `K` again.
    ScaledByK,
}

impl FromStr for Regressand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "scaled-by-k" | "scaled" => Ok(Self::ScaledByK),
            _ => Err(Error::Parse(format!(
                "unknown regressand {s:?}; expected raw or scaled-by-k"
            ))),
        }
    }
}

/// Monomial `x^i z^j` in `x = L/T` and `z = zeta_ol`, labelled `p{i}{j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisTerm {
    pub i: u8,
    pub j: u8,
}

impl BasisTerm {
    pub const fn new(i: u8, j: u8) -> Self {
        Self { i, j }
    }

    pub fn eval(self, x: f64, z: f64) -> f64 {
        x.powi(self.i as i32) * z.powi(self.j as i32)
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}{}", self.i, self.j)
    }
}

impl FromStr for BasisTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d: Vec<u8> = s
            .strip_prefix('p')
            .filter(|r| r.len() == 2)
            .map(|r| r.bytes().collect())
            .ok_or_else(|| Error::Parse(format!("bad basis label {s:?}")))?;
        if !d.iter().all(u8::is_ascii_digit) {
            return Err(Error::Parse(format!("bad basis label {s:?}")));
        }
        Ok(Self::new(d[0] - b'0', d[1] - b'0'))
    }
}

impl Serialize for BasisTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Quadratic in both variables with interaction.
pub const KP_BASIS: [BasisTerm; 6] = [
    BasisTerm::new(0, 0),
    BasisTerm::new(1, 0),
    BasisTerm::new(0, 1),
    BasisTerm::new(2, 0),
    BasisTerm::new(1, 1),
    BasisTerm::new(0, 2),
];

/// Quadratic in `L/T`, linear in `zeta_ol`, with interaction.
pub const KI_KD_BASIS: [BasisTerm; 5] = [
    BasisTerm::new(0, 0),
    BasisTerm::new(1, 0),
    BasisTerm::new(0, 1),
    BasisTerm::new(2, 0),
    BasisTerm::new(1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSample {
    pub l_over_t: f64,
    pub zeta_ol: f64,
    pub gain_k: f64,
    pub gains: PidGains,
}

impl RuleSample {
    pub fn new(model: &SoptdModel, gains: PidGains) -> Self {
        Self {
            l_over_t: model.l_over_t(),
            zeta_ol: model.zeta,
            gain_k: model.gain,
            gains,
        }
    }
}

/// Ordinary least squares fit of one gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainFit {
    pub terms: Vec<BasisTerm>,
    pub coefficients: Vec<f64>,
    /// Standard errors `sqrt(s^2 (X'X)^-1_kk)`.
    pub std_errors: Vec<f64>,
    /// Two-sided 95% t-interval half-widths.
    pub ci95: Vec<f64>,
    /// `sqrt(SSE / (n - p))`.
    pub rmse: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
}

impl GainFit {
    pub fn predict(&self, x: f64, z: f64) -> f64 {
        self.terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * t.eval(x, z))
            .sum()
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t.to_string() == label)
            .map(|k| self.coefficients[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRuleFit {
    pub regressand: Regressand,
    pub kp: GainFit,
    pub ki: GainFit,
    pub kd: GainFit,
}

/// Least squares of `y` on the `terms` evaluated at `xz`.
///
/// Columns are orthogonalized in order by modified Gram-Schmidt; a column
/// whose remainder falls below `1e-10` of its own norm is reported as
/// dependent on the earlier ones.
pub fn fit_gain(xz: &[(f64, f64)], y: &[f64], terms: &[BasisTerm]) -> Result<GainFit> {
    let (n, p) = (xz.len(), terms.len());
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} design rows but {} responses",
            y.len()
        )));
    }
    if p == 0 || n <= p {
        return Err(Error::InvalidInput(format!(
            "{p} basis terms need more than {p} samples, got {n}"
        )));
    }
    if xz.iter().any(|(x, z)| !x.is_finite() || !z.is_finite()) || y.iter().any(|v| !v.is_finite())
    {
        return Err(Error::InvalidInput("non-finite regression data".into()));
    }
    let x = DMatrix::from_fn(n, p, |r, c| terms[c].eval(xz[r].0, xz[r].1));
    let mut q = x.clone();
    let mut rm = DMatrix::<f64>::zeros(p, p);
    let mut dependent = Vec::new();
    for c in 0..p {
        let norm0 = x.column(c).norm();
        for k in 0..c {
            let d = q.column(k).dot(&q.column(c));
            rm[(k, c)] = d;
            let qk = q.column(k).clone_owned();
            q.column_mut(c).axpy(-d, &qk, 1.0);
        }
        let rest = q.column(c).norm();
        if !(rest > 1e-10 * norm0) {
            dependent.push(terms[c].to_string());
            continue;
        }
        rm[(c, c)] = rest;
        q.column_mut(c).scale_mut(1.0 / rest);
    }
    if !dependent.is_empty() {
        return Err(Error::Collinear { columns: dependent });
    }
    let yv = DVector::from_column_slice(y);
    let qty = q.transpose() * &yv;
    let beta = rm
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    let resid = &yv - &x * &beta;
    let sse = resid.norm_squared();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let dof = (n - p) as f64;
    let r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NAN
    };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof;
    let s2 = sse / dof;
    let rinv = rm
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    // (X'X)^-1 = R^-1 R^-T, whose diagonal is the squared row norms of R^-1
    let std_errors: Vec<f64> = (0..p)
        .map(|k| (s2 * rinv.row(k).norm_squared()).sqrt())
        .collect();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(GainFit {
        terms: terms.to_vec(),
        coefficients: beta.iter().copied().collect(),
        ci95: std_errors.iter().map(|se| t * se).collect(),
        std_errors,
        rmse: s2.sqrt(),
        r2,
        adj_r2,
        n,
    })
}

fn responses(
    samples: &[RuleSample],
    regressand: Regressand,
    pick: fn(&PidGains) -> f64,
) -> Vec<f64> {
    samples
        .iter()
        .map(|s| match regressand {
            Regressand::Raw => pick(&s.gains),
            Regressand::ScaledByK => s.gain_k * pick(&s.gains),
        })
        .collect()
}

/// Fits `Kp` on [`KP_BASIS`] and `Ki`, `Kd` on [`KI_KD_BASIS`].
pub fn fit_tuning_rule(samples: &[RuleSample], regressand: Regressand) -> Result<TuningRuleFit> {
    let xz: Vec<(f64, f64)> = samples.iter().map(|s| (s.l_over_t, s.zeta_ol)).collect();
    Ok(TuningRuleFit {
        regressand,
        kp: fit_gain(&xz, &responses(samples, regressand, |g| g.kp), &KP_BASIS)?,
        ki: fit_gain(&xz, &responses(samples, regressand, |g| g.ki), &KI_KD_BASIS)?,
        kd: fit_gain(&xz, &responses(samples, regressand, |g| g.kd), &KI_KD_BASIS)?,
    })
}

pub fn predict_gains(
    fit: &TuningRuleFit,
    l_over_t: f64,
    zeta_ol: f64,
    gain_k: f64,
) -> Result<PidGains> {
    let div = match fit.regressand {
        Regressand::Raw => 1.0,
        Regressand::ScaledByK => {
            if gain_k == 0.0 || !gain_k.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "plant gain must be finite and nonzero, got {gain_k}"
                )));
            }
            gain_k
        }
    };
    Ok(PidGains::new(
        fit.kp.predict(l_over_t, zeta_ol) / div,
        fit.ki.predict(l_over_t, zeta_ol) / div,
        fit.kd.predict(l_over_t, zeta_ol) / div,
    ))
}

/// Which gain a basis search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainKind {
    Kp,
    Ki,
    Kd,
}

/// Every subset of the terms `x^i z^j` with `i <= max_i`, `j <= max_j`
/// containing `p00` and leaving at least one residual degree of freedom,
/// fitted and ranked by adjusted R² (best first). Collinear subsets are skipped.
pub fn search_basis(
    samples: &[RuleSample],
    gain: GainKind,
    regressand: Regressand,
    max_i: u8,
    max_j: u8,
) -> Result<Vec<GainFit>> {
    let pick: fn(&PidGains) -> f64 = match gain {
        GainKind::Kp => |g| g.kp,
        GainKind::Ki => |g| g.ki,
        GainKind::Kd => |g| g.kd,
    };
    let y = responses(samples, regressand, pick);
    let xz: Vec<(f64, f64)> = samples.iter().map(|s| (s.l_over_t, s.zeta_ol)).collect();
    let pool: Vec<BasisTerm> = (0..=max_i)
        .flat_map(|i| (0..=max_j).map(move |j| BasisTerm::new(i, j)))
        .filter(|t| (t.i, t.j) != (0, 0))
        .collect();
    if pool.len() > 16 {
        return Err(Error::InvalidInput(
            "basis search limited to 16 candidate terms".into(),
        ));
    }
    let mut fits = Vec::new();
    for mask in 0u32..(1 << pool.len()) {
        let mut terms = vec![BasisTerm::new(0, 0)];
        terms.extend(
            (0..pool.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| pool[k]),
        );
        if terms.len() >= samples.len() {
            continue;
        }
        match fit_gain(&xz, &y, &terms) {
            Ok(f) => fits.push(f),
            Err(Error::Collinear { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    fits.sort_by(|a, b| b.adj_r2.total_cmp(&a.adj_r2));
    Ok(fits)
}

//! Kruskal-Wallis rank test across groups of samples.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Smallest p-value reported as a number; anything below prints as `< 1e-300`.
pub const P_FLOOR: f64 = 1e-300;

/// Upper-tail probability, floored at [`P_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum PValue {
    Value(f64),
    BelowFloor,
}

impl PValue {
    fn from_raw(p: f64) -> Self {
        if p < P_FLOOR {
            Self::BelowFloor
        } else {
            Self::Value(p.min(1.0))
        }
    }

    /// Numeric value, with the floor standing in for underflow.
    pub fn upper_bound(self) -> f64 {
        match self {
            Self::Value(p) => p,
            Self::BelowFloor => P_FLOOR,
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(p) => write!(f, "{p}"),
            Self::BelowFloor => write!(f, "< 1e-300"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalResult {
    pub h: f64,
    pub df: usize,
    pub p_value: PValue,
    pub n: usize,
}

/// Mid-ranks (1-based) of `values`, plus the sum of `t^3 - t` over tie groups.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + j) as f64;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// `H = 12/(n(n+1)) sum n_i (rbar_i - rbar)^2`, divided by the tie correction
/// `1 - sum(t^3 - t)/(n^3 - n)`, against chi-square with `g - 1` degrees of freedom.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KruskalResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(k) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(Error::InvalidInput(format!("group {k} is empty")));
    }
    let all: Vec<f64> = groups
        .iter()
        .flat_map(|g| g.as_ref().iter().copied())
        .collect();
    if all.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN observation".into()));
    }
    let n = all.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 observations, got {n}"
        )));
    }
    let (ranks, ties) = mid_ranks(&all);
    let nf = n as f64;
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Err(Error::Degenerate("all observations are identical".into()));
    }
    let rbar = 0.5 * (nf + 1.0);
    let mut offset = 0;
    let mut ss = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let mean = ranks[offset..offset + len].iter().sum::<f64>() / len as f64;
        ss += len as f64 * (mean - rbar).powi(2);
        offset += len;
    }
    let h = 12.0 / (nf * (nf + 1.0)) * ss / correction;
    let df = groups.len() - 1;
    let chi = ChiSquared::new(df as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(KruskalResult {
        h,
        df,
        p_value: PValue::from_raw(chi.sf(h)),
        n,
    })
}

/// Reads a CSV with a `group` column and returns, per group in first-seen
/// order, the values of `column`.
pub fn read_grouped_column<R: std::io::Read>(
    r: R,
    column: &str,
) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("no {name:?} column in {header:?}")))
    };
    let (gi, vi) = (find("group")?, find(column)?);
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let v: f64 = rec[vi]
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {:?} in column {column}", &rec[vi])))?;
        let g = rec[gi].to_string();
        if !groups.contains_key(&g) {
            order.push(g.clone());
        }
        groups.entry(g).or_default().push(v);
    }
    Ok(order
        .into_iter()
        .map(|g| {
            let v = groups.remove(&g).unwrap_or_default();
            (g, v)
        })
        .collect())
}

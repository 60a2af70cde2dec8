//! Second-order-plus-time-delay plants `K e^{-Ls} / (s^2 + 2 zeta w s + w^2)`, `w = 1/T`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pade::pade_tf;
use crate::polytf::{Polynomial, RationalTF};
use crate::rng::{CounterRng, Domain};

/// Plant in normalized monic-denominator form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawModel")]
pub struct SoptdModel {
    #[serde(rename = "K")]
    pub gain: f64,
    #[serde(rename = "L")]
    pub delay: f64,
    #[serde(rename = "T")]
    pub lag: f64,
    #[serde(rename = "zeta_ol")]
    pub zeta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "K")]
    gain: f64,
    #[serde(rename = "L")]
    delay: f64,
    #[serde(rename = "T")]
    lag: f64,
    #[serde(rename = "zeta_ol")]
    zeta: f64,
}

impl TryFrom<RawModel> for SoptdModel {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        SoptdModel::new(r.gain, r.delay, r.lag, r.zeta)
    }
}

impl SoptdModel {
    pub fn new(gain: f64, delay: f64, lag: f64, zeta: f64) -> Result<Self> {
        let m = Self {
            gain,
            delay,
            lag,
            zeta,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks `L > 0`, `T > 0`, `zeta > 0`, `K != 0`, all finite.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gain, self.delay, self.lag, self.zeta]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidModel(format!(
                "non-finite parameter in {self}"
            )));
        }
        if self.gain == 0.0 {
            return Err(Error::InvalidModel("K must be nonzero".into()));
        }
        if !(self.delay > 0.0) {
            return Err(Error::InvalidModel(format!(
                "L must be positive, got {}",
                self.delay
            )));
        }
        if !(self.lag > 0.0) {
            return Err(Error::InvalidModel(format!(
                "T must be positive, got {}",
                self.lag
            )));
        }
        if !(self.zeta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "zeta_ol must be positive, got {}",
                self.zeta
            )));
        }
        Ok(())
    }

    /// Normalizes `b e^{-Ls} / (a2 s^2 + a1 s + a0)`.
    ///
    /// This is the single place where textbook forms are converted:
    /// `K = b/a2`, `w = sqrt(a0/a2)`, `T = 1/w`, `zeta = (a1/a2) / (2w)`.
    pub fn from_quadratic(b: f64, a2: f64, a1: f64, a0: f64, delay: f64) -> Result<Self> {
        if a2 == 0.0 {
            return Err(Error::InvalidModel(
                "leading denominator coefficient is zero".into(),
            ));
        }
        let w2 = a0 / a2;
        if !(w2 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "a0/a2 = {w2} is not positive; not an oscillatory or lag second-order plant"
            )));
        }
        let w = w2.sqrt();
        Self::new(b / a2, delay, 1.0 / w, a1 / a2 / (2.0 * w))
    }

    /// Normalizes `k e^{-Ls} / ((1 + tau1 s)(1 + tau2 s))`.
    pub fn from_time_constants(k: f64, tau1: f64, tau2: f64, delay: f64) -> Result<Self> {
        Self::from_quadratic(k, tau1 * tau2, tau1 + tau2, 1.0, delay)
    }

    pub fn omega(&self) -> f64 {
        1.0 / self.lag
    }

    pub fn dc_gain(&self) -> f64 {
        self.gain * self.lag * self.lag
    }

    pub fn l_over_t(&self) -> f64 {
        self.delay / self.lag
    }

    /// `s^2 + 2 zeta w s + w^2`.
    pub fn denominator(&self) -> Polynomial {
        let w = self.omega();
        Polynomial::new(vec![w * w, 2.0 * self.zeta * w, 1.0])
    }

    /// Delay-free part `K / (s^2 + 2 zeta w s + w^2)`.
    pub fn rational_part(&self) -> RationalTF {
        RationalTF::new(Polynomial::constant(self.gain), self.denominator())
            .expect("plant denominator is monic")
    }
}

impl fmt::Display for SoptdModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K={} L={} T={} zeta_ol={}",
            self.gain, self.delay, self.lag, self.zeta
        )
    }
}

/// Plant with the delay replaced by its order-`npade` Pade approximant;
/// `npade = 0` drops the delay.
pub fn to_tf(model: &SoptdModel, npade: usize) -> Result<RationalTF> {
    let g = model.rational_part();
    if npade == 0 {
        return Ok(g);
    }
    Ok(g.series(&pade_tf(npade, model.delay)?))
}

/// Multiplies each of `L`, `T`, `zeta` by an independent factor uniform in
/// `[1 - pct, 1 + pct)`, drawn from stream `(seed, index)` in that order.
/// `K` is left alone.
pub fn perturb(model: &SoptdModel, pct: f64, seed: u64, index: u64) -> Result<SoptdModel> {
    if !(0.0..1.0).contains(&pct) {
        return Err(Error::InvalidInput(format!(
            "perturbation must lie in [0, 1), got {pct}"
        )));
    }
    if pct == 0.0 {
        return Ok(*model);
    }
    let mut rng = CounterRng::new(seed, Domain::Perturb, index);
    let mut factor = || rng.uniform(1.0 - pct, 1.0 + pct);
    let delay = model.delay * factor();
    let lag = model.lag * factor();
    let zeta = model.zeta * factor();
    SoptdModel::new(model.gain, delay, lag, zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayClass {
    LagDominant,
    Balanced,
    DelayDominant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DampingClass {
    Underdamped,
    CriticallyDamped,
    Overdamped,
}

impl fmt::Display for DelayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LagDominant => "lag-dominant",
            Self::Balanced => "balanced",
            Self::DelayDominant => "delay-dominant",
        })
    }
}

impl fmt::Display for DampingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Underdamped => "underdamped",
            Self::CriticallyDamped => "critically-damped",
            Self::Overdamped => "overdamped",
        })
    }
}

/// One of the nine test-bench plants, `G1..=G9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BenchmarkId(u8);

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 9] = [
        BenchmarkId(1),
        BenchmarkId(2),
        BenchmarkId(3),
        BenchmarkId(4),
        BenchmarkId(5),
        BenchmarkId(6),
        BenchmarkId(7),
        BenchmarkId(8),
        BenchmarkId(9),
    ];

    pub fn new(index: u8) -> Result<Self> {
        if (1..=9).contains(&index) {
            Ok(Self(index))
        } else {
            Err(not_found(&index.to_string()))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Row of the 3x3 class grid.
    pub fn delay_class(self) -> DelayClass {
        match (self.0 - 1) / 3 {
            0 => DelayClass::LagDominant,
            1 => DelayClass::Balanced,
            _ => DelayClass::DelayDominant,
        }
    }

    /// Column of the 3x3 class grid.
    pub fn damping_class(self) -> DampingClass {
        match (self.0 - 1) % 3 {
            0 => DampingClass::Underdamped,
            1 => DampingClass::CriticallyDamped,
            _ => DampingClass::Overdamped,
        }
    }
}

fn not_found(id: &str) -> Error {
    Error::NotFound {
        id: id.to_string(),
        valid: "G1..G9".into(),
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.0)
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix(['G', 'g']).unwrap_or(s);
        digits
            .parse::<u8>()
            .ok()
            .and_then(|i| BenchmarkId::new(i).ok())
            .ok_or_else(|| not_found(s))
    }
}

/// The registry, normalized from each plant's textbook form.
pub fn benchmark(id: BenchmarkId) -> SoptdModel {
    let m = match id.0 {
        1 => SoptdModel::from_quadratic(1.0, 9.0, 2.4, 1.0, 1.0),
        2 => SoptdModel::from_quadratic(1.0, 1.0, 2.0, 1.0, 0.8),
        3 => SoptdModel::from_time_constants(1.0, 10.0, 4.0, 2.0),
        4 => SoptdModel::from_quadratic(0.5, 1.0, 1.2, 1.0, 1.0),
        5 => SoptdModel::from_time_constants(1.0, 1.0, 1.0, 1.0),
        6 => SoptdModel::from_quadratic(1.0, 9.0, 24.0, 1.0, 3.0),
        7 => SoptdModel::from_quadratic(1.0, 3.2158, 3.1614, 3.0568, 1.2755),
        8 => SoptdModel::from_time_constants(1.0, 1.0, 1.0, 10.0),
        9 => SoptdModel::from_quadratic(1.0, 0.12, 1.33, 1.24, 2.0),
        _ => unreachable!("BenchmarkId is validated on construction"),
    };
    m.expect("registry entries are valid")
}

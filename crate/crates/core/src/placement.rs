//! Dominant pole placement gain synthesis against the Pade-3 closed loop.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pade::pade_tf;
use crate::plant::SoptdModel;
use crate::polytf::{max_real_part, roots, Polynomial};

/// Poles with real part at or above this are treated as unstable.
pub const STABILITY_MARGIN: f64 = -1e-9;

/// Pade order used for synthesis.
pub const DESIGN_PADE_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub m: f64,
    pub zeta_cl: f64,
    pub omega_cl: f64,
}

impl DesignSpec {
    pub fn new(m: f64, zeta_cl: f64, omega_cl: f64) -> Result<Self> {
        let s = Self {
            m,
            zeta_cl,
            omega_cl,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0) || !self.m.is_finite() {
            return Err(Error::InvalidInput(format!(
                "m must be >= 1, got {}",
                self.m
            )));
        }
        if !(self.zeta_cl > 0.0) || !self.zeta_cl.is_finite() {
            return Err(Error::InvalidInput(format!(
                "zeta_cl must be > 0, got {}",
                self.zeta_cl
            )));
        }
        if !(self.omega_cl > 0.0) || !self.omega_cl.is_finite() {
            return Err(Error::InvalidInput(format!(
                "omega_cl must be > 0, got {}",
                self.omega_cl
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonDominantPoleType {
    AllComplex,
    AllReal,
    Mixed,
}

impl NonDominantPoleType {
    pub const ALL: [Self; 3] = [Self::AllComplex, Self::AllReal, Self::Mixed];

    pub fn label(self) -> &'static str {
        match self {
            Self::AllComplex => "all-complex",
            Self::AllReal => "all-real",
            Self::Mixed => "mixed",
        }
    }
}

impl fmt::Display for NonDominantPoleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NonDominantPoleType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all-complex" | "complex" => Ok(Self::AllComplex),
            "all-real" | "real" => Ok(Self::AllReal),
            "mixed" => Ok(Self::Mixed),
            _ => Err(Error::InvalidInput(format!(
                "unknown pole type {s:?}; expected all-complex, all-real or mixed"
            ))),
        }
    }
}

/// Which coefficient `s^1..s^4` fixes `Kp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KpSource {
    S1,
    S2,
    S3,
    S4,
}

impl KpSource {
    pub const ALL: [Self; 4] = [Self::S1, Self::S2, Self::S3, Self::S4];

    pub fn power(self) -> usize {
        self as usize + 1
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for KpSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.power())
    }
}

impl FromStr for KpSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches(['S', 's']) {
            "1" => Ok(Self::S1),
            "2" => Ok(Self::S2),
            "3" => Ok(Self::S3),
            "4" => Ok(Self::S4),
            _ => Err(Error::InvalidInput(format!(
                "unknown Kp source {s:?}; expected S1..S4"
            ))),
        }
    }
}

/// Ideal PID `Kp + Ki/s + Kd s`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    pub fn is_zero(&self) -> bool {
        self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.kp.is_finite() && self.ki.is_finite() && self.kd.is_finite()
    }

    /// Controller numerator `Kd s^2 + Kp s + Ki` (the denominator is `s`).
    pub fn numerator(&self) -> Polynomial {
        Polynomial::new(vec![self.ki, self.kp, self.kd])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.kp * c, self.ki * c, self.kd * c)
    }
}

impl fmt::Display for PidGains {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kp={} Ki={} Kd={}", self.kp, self.ki, self.kd)
    }
}

impl FromStr for PidGains {
    type Err = Error;
    /// `"kp,ki,kd"`.
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("gains {s:?}: {e}")))?;
        match v[..] {
            [kp, ki, kd] => Ok(Self::new(kp, ki, kd)),
            _ => Err(Error::InvalidInput(format!(
                "expected three gains kp,ki,kd, got {s:?}"
            ))),
        }
    }
}

/// Monic degree-6 target: dominant pair times the four non-dominant poles.
pub fn desired_charpoly(spec: &DesignSpec, ptype: NonDominantPoleType) -> Polynomial {
    let (m, z, w) = (spec.m, spec.zeta_cl, spec.omega_cl);
    let dominant = Polynomial::new(vec![w * w, 2.0 * z * w, 1.0]);
    let pair = Polynomial::new(vec![m * m * w * w, 2.0 * m * z * w, 1.0]);
    let real = Polynomial::new(vec![m * z * w, 1.0]);
    let real2 = &real * &real;
    let rest = match ptype {
        NonDominantPoleType::AllComplex => &pair * &pair,
        NonDominantPoleType::AllReal => &real2 * &real2,
        NonDominantPoleType::Mixed => &pair * &real2,
    };
    &dominant * &rest
}

/// `s * Pd * D_r + K * (Kd s^2 + Kp s + Ki) * N_r`, where `D_r`, `N_r` are the
/// Pade denominator and numerator. Its leading coefficient is `L^r`.
pub fn closed_loop_charpoly(
    model: &SoptdModel,
    gains: &PidGains,
    npade: usize,
) -> Result<Polynomial> {
    let pade = pade_tf(npade, model.delay)?;
    let open = &model.denominator().shift(1) * pade.den();
    let ctrl = &gains.numerator().scale(model.gain) * pade.num();
    let c = &open + &ctrl;
    if c.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    Ok(c)
}

/// Pade-3 closed-loop characteristic polynomial divided by `L^3`.
pub fn openloop_charpoly(model: &SoptdModel, gains: &PidGains) -> Result<Polynomial> {
    model.validate()?;
    let c = closed_loop_charpoly(model, gains, DESIGN_PADE_ORDER)?;
    Ok(c.scale(1.0 / model.delay.powi(DESIGN_PADE_ORDER as i32)))
}

/// The characteristic polynomial is affine in the gains,
/// `c = base + Kp a + Ki b + Kd d`. Returns `(base, a, b, d)`, all divided by `L^3`.
fn affine_parts(model: &SoptdModel) -> Result<[Polynomial; 4]> {
    let pade = pade_tf(DESIGN_PADE_ORDER, model.delay)?;
    let inv = 1.0 / model.delay.powi(DESIGN_PADE_ORDER as i32);
    let base = (&model.denominator().shift(1) * pade.den()).scale(inv);
    let kn = pade.num().scale(model.gain * inv);
    Ok([base, kn.shift(1), kn.clone(), kn.shift(2)])
}

/// Gains that make the Pade-3 closed loop match the desired polynomial at
/// `s^0` (fixes Ki), `s^5` (fixes Kd) and `s^k`, `k = src.power()` (fixes Kp).
pub fn solve_gains(
    model: &SoptdModel,
    spec: &DesignSpec,
    ptype: NonDominantPoleType,
    src: KpSource,
) -> Result<PidGains> {
    spec.validate()?;
    solve_against(model, &desired_charpoly(spec, ptype), src)
}

/// Coefficient matching against an arbitrary monic degree-6 target.
pub fn solve_against(model: &SoptdModel, target: &Polynomial, src: KpSource) -> Result<PidGains> {
    model.validate()?;
    let [base, a, b, d] = affine_parts(model)?;
    // only b reaches s^0; only d reaches s^5
    debug_assert!(a.coeff(0) == 0.0 && d.coeff(0) == 0.0);
    debug_assert!(a.coeff(5) == 0.0 && b.coeff(5) == 0.0);
    let ki = (target.coeff(0) - base.coeff(0)) / b.coeff(0);
    let kd = (target.coeff(5) - base.coeff(5)) / d.coeff(5);
    let k = src.power();
    let kp = (target.coeff(k) - base.coeff(k) - ki * b.coeff(k) - kd * d.coeff(k)) / a.coeff(k);
    Ok(PidGains { kp, ki, kd })
}

/// Roots of the closed-loop characteristic polynomial at Pade order `npade`.
pub fn closedloop_poles(
    model: &SoptdModel,
    gains: &PidGains,
    npade: usize,
) -> Result<Vec<Complex64>> {
    if npade == 0 {
        return Err(Error::OrderOutOfRange {
            order: 0,
            min: 1,
            max: crate::pade::MAX_ORDER,
        });
    }
    if gains.is_zero() {
        return Err(Error::InvalidGains(
            "the controller is identically zero, so the loop is open".into(),
        ));
    }
    if !gains.is_finite() {
        return Err(Error::InvalidGains(format!("non-finite gains {gains}")));
    }
    model.validate()?;
    roots(&closed_loop_charpoly(model, gains, npade)?)
}

/// True iff every pole has real part below [`STABILITY_MARGIN`].
pub fn is_stable(poles: &[Complex64]) -> Result<bool> {
    max_real_part(poles)
        .map(|m| m < STABILITY_MARGIN)
        .ok_or_else(|| Error::InvalidInput("stability of an empty pole list".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{benchmark, BenchmarkId};

    fn g5() -> SoptdModel {
        benchmark(BenchmarkId::new(5).unwrap())
    }

    #[test]
    fn desired_examples() {
        let s = DesignSpec::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            desired_charpoly(&s, NonDominantPoleType::AllReal).coeffs(),
            &[1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]
        );
        let s = DesignSpec::new(2.0, 1.0, 1.0).unwrap();
        assert_eq!(
            desired_charpoly(&s, NonDominantPoleType::AllComplex),
            Polynomial::from_descending(&[1.0, 10.0, 41.0, 88.0, 104.0, 64.0, 16.0])
        );
    }

    #[test]
    fn critical_damping_collapses_pole_types() {
        let s = DesignSpec::new(3.7, 1.0, 2.2).unwrap();
        let c = desired_charpoly(&s, NonDominantPoleType::AllComplex);
        for t in NonDominantPoleType::ALL {
            let p = desired_charpoly(&s, t);
            for k in 0..=6 {
                assert!((p.coeff(k) - c.coeff(k)).abs() <= 1e-12 * c.coeff(k).abs());
            }
        }
    }

    #[test]
    fn hand_point() {
        let s = DesignSpec::new(2.0, 1.0, 1.0).unwrap();
        let g = solve_gains(&g5(), &s, NonDominantPoleType::AllComplex, KpSource::S1).unwrap();
        assert!((g.kp + 0.4).abs() < 1e-12);
        assert!((g.ki - 2.0 / 15.0).abs() < 1e-12);
        assert!((g.kd - 4.0).abs() < 1e-12);
    }

    #[test]
    fn all_real_ki() {
        let s = DesignSpec::new(2.0, 2.0, 1.0).unwrap();
        let g = solve_gains(&g5(), &s, NonDominantPoleType::AllReal, KpSource::S2).unwrap();
        assert!((g.ki - 256.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn openloop_charpoly_rows() {
        let m = SoptdModel::new(0.7, 1.3, 2.0, 0.6).unwrap();
        let g = PidGains::new(0.4, 0.25, 1.1);
        let c = openloop_charpoly(&m, &g).unwrap();
        let l3 = m.delay.powi(3);
        assert!((c.coeff(0) - 120.0 * m.gain * g.ki / l3).abs() < 1e-12);
        let s5 = 12.0 / m.delay + 2.0 * m.zeta * m.omega() - m.gain * g.kd;
        assert!((c.coeff(5) - s5).abs() < 1e-12);
        assert_eq!(c.coeff(6), 1.0);
    }

    #[test]
    fn zero_gain_charpoly_is_open_loop_times_s() {
        let m = SoptdModel::new(0.7, 1.3, 2.0, 0.6).unwrap();
        let c = openloop_charpoly(&m, &PidGains::default()).unwrap();
        let l = m.delay;
        let want = &(&m.denominator()
            * &Polynomial::new(vec![120.0 / l.powi(3), 60.0 / (l * l), 12.0 / l, 1.0]))
            * &Polynomial::new(vec![0.0, 1.0]);
        for k in 0..=6 {
            assert!((c.coeff(k) - want.coeff(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_controller_rejected() {
        assert!(matches!(
            closedloop_poles(&g5(), &PidGains::default(), 3),
            Err(Error::InvalidGains(_))
        ));
    }

    #[test]
    fn pole_counts() {
        let g = PidGains::new(0.35, 0.36, 1.0);
        for r in [1, 3, 9] {
            assert_eq!(closedloop_poles(&g5(), &g, r).unwrap().len(), r + 3);
        }
    }

    #[test]
    fn stability_convention() {
        let c = |re, im| Complex64::new(re, im);
        assert!(is_stable(&[c(-1.0, 0.0), c(-2.0, 3.0), c(-2.0, -3.0)]).unwrap());
        assert!(!is_stable(&[c(-1.0, 0.0), c(0.001, 0.0)]).unwrap());
        assert!(!is_stable(&[c(-1.0, 0.0), c(-1e-12, 0.0)]).unwrap());
        assert!(is_stable(&[]).is_err());
    }

    #[test]
    fn invalid_model_rejected() {
        let bad = SoptdModel { gain: 0.0, ..g5() };
        let s = DesignSpec::new(2.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            solve_gains(&bad, &s, NonDominantPoleType::AllReal, KpSource::S1),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn parsing() {
        assert_eq!(
            "all-real".parse::<NonDominantPoleType>().unwrap(),
            NonDominantPoleType::AllReal
        );
        assert_eq!("S3".parse::<KpSource>().unwrap(), KpSource::S3);
        assert_eq!(
            "0.1, 2,-3".parse::<PidGains>().unwrap(),
            PidGains::new(0.1, 2.0, -3.0)
        );
        assert!("1,2".parse::<PidGains>().is_err());
    }
}

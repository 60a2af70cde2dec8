use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pade::pade_tf;
use crate::placement::PidGains;
use crate::plant::SoptdModel;
use crate::polytf::{roots, Polynomial, RationalTF};

/// How the loop delay enters the frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayTreatment {
    /// `exp(-j w L)` exactly.
    Exact,
    /// The order-`r` Pade approximant inside the loop.
    Pade(usize),
}

/// Classical stability margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// `f64::INFINITY` when the phase never reaches -180 deg (mod 360).
    pub gain_margin: f64,
    pub omega_pc: Option<f64>,
    /// `None` when `|L(jw)|` never crosses 1.
    pub phase_margin_deg: Option<f64>,
    pub omega_gc: Option<f64>,
}

/// `c * prod(s - z) / prod(s - p) * exp(-s tau)` with its roots precomputed,
/// so the phase can be unwrapped analytically.
#[derive(Debug, Clone)]
pub struct LoopResponse {
    rational: RationalTF,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    lead_phase: f64,
    tau: f64,
}

/// Continuous argument of `j w - z` for `w` in `(0, inf)`.
fn factor_phase(w: f64, z: Complex64) -> f64 {
    let x = -z.re;
    let y = w - z.im;
    if x > 0.0 {
        (y / x).atan()
    } else if x < 0.0 {
        PI - (y / -x).atan()
    } else if y >= 0.0 {
        PI / 2.0
    } else {
        -PI / 2.0
    }
}

impl LoopResponse {
    pub fn new(rational: RationalTF, tau: f64) -> Result<Self> {
        if rational.num().is_zero() {
            return Err(Error::InvalidInput("loop transfer function is zero".into()));
        }
        let zeros = match rational.num().degree() {
            Some(d) if d >= 1 => roots(rational.num())?,
            _ => Vec::new(),
        };
        let poles = match rational.den().degree() {
            Some(d) if d >= 1 => roots(rational.den())?,
            _ => Vec::new(),
        };
        let c = rational.num().leading() / rational.den().leading();
        Ok(Self {
            rational,
            zeros,
            poles,
            lead_phase: if c < 0.0 { PI } else { 0.0 },
            tau,
        })
    }

    pub fn eval(&self, w: f64) -> Complex64 {
        self.rational.eval(Complex64::new(0.0, w)) * Complex64::from_polar(1.0, -w * self.tau)
    }

    pub fn magnitude(&self, w: f64) -> f64 {
        self.rational.eval(Complex64::new(0.0, w)).norm()
    }

    /// Continuous phase, before branch alignment.
    fn raw_phase(&self, w: f64) -> f64 {
        let z: f64 = self.zeros.iter().map(|&z| factor_phase(w, z)).sum();
        let p: f64 = self.poles.iter().map(|&p| factor_phase(w, p)).sum();
        self.lead_phase + z - p - w * self.tau
    }

    fn corners(&self) -> (f64, f64) {
        let mut mags: Vec<f64> = self
            .zeros
            .iter()
            .chain(&self.poles)
            .map(|z| z.norm())
            .filter(|&m| m > 1e-12)
            .collect();
        if self.tau > 0.0 {
            mags.push(1.0 / self.tau);
        }
        let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().copied().fold(0.0, f64::max);
        if mags.is_empty() {
            (1.0, 1.0)
        } else {
            (lo, hi)
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    // on log frequency; f(a) and f(b) have opposite signs
    let (mut la, mut lb) = (a.ln(), b.ln());
    let mut fa = f(a);
    for _ in 0..200 {
        let lm = 0.5 * (la + lb);
        let m = lm.exp();
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            la = lm;
            fa = fm;
            a = m;
        } else {
            lb = lm;
            b = m;
        }
        if lb - la < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Margins of a loop over `[1e-4 w_lo, 1e3 w_hi]`, where `w_lo`, `w_hi` are the
/// smallest and largest corner frequencies (pole and zero magnitudes and `1/tau`).
///
/// The phase is the exact sum of the factor phases minus `w tau`, shifted by a
/// multiple of 360 deg so it starts on the principal branch at the lowest
/// frequency; for an integrating loop with positive gain that is near -90 deg.
/// `w_gc` is the lowest unit-gain crossing and `Pm = 180 + phase(w_gc)`. The
/// gain margin is the smallest `1/|L|` over every crossing of -180 deg (mod 360).
pub fn loop_margins(lp: &LoopResponse) -> Margins {
    let (clo, chi) = lp.corners();
    let (lo, hi) = (clo * 1e-4, chi * 1e3);
    let base: Vec<f64> = {
        let decades = (hi / lo).log10();
        let n = ((100.0 * decades).ceil() as usize).max(200);
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    };
    let principal = lp.eval(lo).arg();
    let shift = 2.0 * PI * ((principal - lp.raw_phase(lo)) / (2.0 * PI)).round();
    let phase = |w: f64| lp.raw_phase(w) + shift;

    // subdivide wherever the phase moves more than pi/8 between samples
    let mut grid = Vec::with_capacity(base.len());
    let mut phases = Vec::with_capacity(base.len());
    let mut prev_w = base[0];
    let mut prev_p = phase(prev_w);
    grid.push(prev_w);
    phases.push(prev_p);
    for &w in &base[1..] {
        let p = phase(w);
        let parts = ((p - prev_p).abs() / (PI / 8.0)).ceil().max(1.0) as usize;
        for j in 1..parts {
            let ws = prev_w * (w / prev_w).powf(j as f64 / parts as f64);
            grid.push(ws);
            phases.push(phase(ws));
        }
        grid.push(w);
        phases.push(p);
        prev_w = w;
        prev_p = p;
    }

    let log_mag = |w: f64| lp.magnitude(w).ln();
    let mut omega_gc = None;
    let mut prev = log_mag(grid[0]);
    for i in 1..grid.len() {
        let cur = log_mag(grid[i]);
        if prev == 0.0 {
            omega_gc = Some(grid[i - 1]);
            break;
        }
        if (prev < 0.0) != (cur < 0.0) {
            omega_gc = Some(bisect(log_mag, grid[i - 1], grid[i]));
            break;
        }
        prev = cur;
    }
    let phase_margin_deg = omega_gc.map(|w| 180.0 + phase(w).to_degrees());

    let level = |p: f64| ((p + PI) / (2.0 * PI)).floor();
    let mut gain_margin = f64::INFINITY;
    let mut omega_pc = None;
    for i in 1..grid.len() {
        let (l0, l1) = (level(phases[i - 1]), level(phases[i]));
        if l0 == l1 {
            continue;
        }
        // a crossing of -pi + 2 pi k for each integer between the two levels
        let (kmin, kmax) = (l0.min(l1) + 1.0, l0.max(l1));
        let mut k = kmin;
        while k <= kmax {
            let target = -PI + 2.0 * PI * k;
            let w = bisect(|w| phase(w) - target, grid[i - 1], grid[i]);
            let gm = 1.0 / lp.magnitude(w);
            if gm < gain_margin {
                gain_margin = gm;
                omega_pc = Some(w);
            }
            k += 1.0;
        }
    }
    Margins {
        gain_margin,
        omega_pc,
        phase_margin_deg,
        omega_gc,
    }
}

/// Unwrapped loop phase (radians) with the same branch convention as [`loop_margins`].
pub fn loop_phase(lp: &LoopResponse, w: f64) -> f64 {
    let (clo, _) = lp.corners();
    let lo = clo * 1e-4;
    let principal = lp.eval(lo).arg();
    let shift = 2.0 * PI * ((principal - lp.raw_phase(lo)) / (2.0 * PI)).round();
    lp.raw_phase(w) + shift
}

/// Open loop `C G` for the plant and an ideal PID.
pub fn pid_loop(
    model: &SoptdModel,
    gains: &PidGains,
    delay: DelayTreatment,
) -> Result<LoopResponse> {
    model.validate()?;
    if gains.is_zero() {
        return Err(Error::InvalidGains(
            "the controller is identically zero".into(),
        ));
    }
    let num = gains.numerator().scale(model.gain);
    let den = model.denominator().shift(1);
    match delay {
        DelayTreatment::Exact => LoopResponse::new(RationalTF::new(num, den)?, model.delay),
        DelayTreatment::Pade(r) => {
            let p = pade_tf(r, model.delay)?;
            let n: Polynomial = &num * p.num();
            let d: Polynomial = &den * p.den();
            LoopResponse::new(RationalTF::new(n, d)?, 0.0)
        }
    }
}

pub fn margins(model: &SoptdModel, gains: &PidGains, delay: DelayTreatment) -> Result<Margins> {
    Ok(loop_margins(&pid_loop(model, gains, delay)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrator_plus_delay() {
        let lp = LoopResponse::new(RationalTF::from_coeffs(&[1.0], &[0.0, 1.0]), 1.0).unwrap();
        let m = loop_margins(&lp);
        assert!((m.omega_gc.unwrap() - 1.0).abs() < 1e-10);
        assert!((m.phase_margin_deg.unwrap() - (90.0 - 180.0 / PI)).abs() < 1e-8);
        assert!((m.gain_margin - PI / 2.0).abs() < 1e-8);
        assert!((m.omega_pc.unwrap() - PI / 2.0).abs() < 1e-8);
    }

    #[test]
    fn no_gain_crossover() {
        let lp = LoopResponse::new(RationalTF::from_coeffs(&[0.5], &[1.0, 1.0]), 0.0).unwrap();
        let m = loop_margins(&lp);
        assert_eq!(m.omega_gc, None);
        assert_eq!(m.phase_margin_deg, None);
        assert_eq!(m.gain_margin, f64::INFINITY);
    }

    #[test]
    fn third_order_lag() {
        // K/(s+1)^3 crosses -180 at w = sqrt(3) with |L| = K/8
        let lp =
            LoopResponse::new(RationalTF::from_coeffs(&[2.0], &[1.0, 3.0, 3.0, 1.0]), 0.0).unwrap();
        let m = loop_margins(&lp);
        assert!((m.gain_margin - 4.0).abs() < 1e-9);
        assert!((m.omega_pc.unwrap() - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn phase_tracks_principal_value() {
        let lp = LoopResponse::new(RationalTF::from_coeffs(&[1.0, -0.5], &[0.0, 2.0, 1.0]), 0.7)
            .unwrap();
        for w in [0.01, 0.3, 1.0, 4.0, 20.0] {
            let p = loop_phase(&lp, w);
            let d = (p - lp.eval(w).arg()) / (2.0 * PI);
            assert!((d - d.round()).abs() < 1e-12, "{w}");
        }
    }
}

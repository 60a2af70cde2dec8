use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pade::pade_tf;
use crate::placement::PidGains;
use crate::plant::SoptdModel;
use crate::polytf::{Polynomial, RationalTF};

/// The four closed-loop maps of the unity-feedback loop, all over the common
/// characteristic polynomial `char = s Pd D + K Cn N` with no cancellation.
///
/// Here `Pd` is the plant denominator, `Cn = Kd s^2 + Kp s + Ki` the controller
/// numerator and `N/D` the delay approximant (`N = D = 1` for `npade = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySet {
    /// Error sensitivity `1/(1+GC)`.
    pub se: RationalTF,
    /// Complementary sensitivity `GC/(1+GC)`.
    pub t: RationalTF,
    /// Disturbance sensitivity `G/(1+GC)`.
    pub sd: RationalTF,
    /// Control sensitivity `C/(1+GC)`, improper by one for an ideal PID.
    pub su: RationalTF,
    pub model: SoptdModel,
    pub gains: PidGains,
    pub npade: usize,
    parts: LoopParts,
}

#[derive(Debug, Clone, PartialEq)]
struct LoopParts {
    plant_den: Polynomial,
    ctrl_num: Polynomial,
    pade_num: Polynomial,
    pade_den: Polynomial,
    charpoly: Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensitivity {
    Se,
    T,
    Sd,
    Su,
}

fn tf(num: Polynomial, den: &Polynomial) -> Result<RationalTF> {
    RationalTF::new(num, den.clone())
}

impl SensitivitySet {
    pub fn new(model: &SoptdModel, gains: &PidGains, npade: usize) -> Result<Self> {
        model.validate()?;
        if gains.is_zero() {
            return Err(Error::InvalidGains(
                "the controller is identically zero".into(),
            ));
        }
        let (pade_num, pade_den) = if npade == 0 {
            (Polynomial::constant(1.0), Polynomial::constant(1.0))
        } else {
            let p = pade_tf(npade, model.delay)?;
            (p.num().clone(), p.den().clone())
        };
        let plant_den = model.denominator();
        let ctrl_num = gains.numerator();
        let open = &plant_den.shift(1) * &pade_den;
        let kcn = &ctrl_num.scale(model.gain) * &pade_num;
        let charpoly = &open + &kcn;
        if charpoly.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        let se = tf(open.clone(), &charpoly)?;
        let t = tf(kcn, &charpoly)?;
        let sd = tf(pade_num.scale(model.gain).shift(1), &charpoly)?;
        let su = tf(&ctrl_num * &(&plant_den * &pade_den), &charpoly)?;
        Ok(Self {
            se,
            t,
            sd,
            su,
            model: *model,
            gains: *gains,
            npade,
            parts: LoopParts {
                plant_den,
                ctrl_num,
                pade_num,
                pade_den,
                charpoly,
            },
        })
    }

    pub fn charpoly(&self) -> &Polynomial {
        &self.parts.charpoly
    }

    /// `Sd(s)/s = K N / char`: the response to a unit step disturbance. The
    /// explicit `s` in `Sd`'s numerator is dropped structurally, not numerically.
    pub fn sd_over_s(&self) -> RationalTF {
        RationalTF::new(
            self.parts.pade_num.scale(self.model.gain),
            self.parts.charpoly.clone(),
        )
        .expect("nonzero charpoly")
    }

    /// `Se(s)/s = Pd D / char`: the error after a unit set-point step.
    pub fn se_over_s(&self) -> RationalTF {
        RationalTF::new(
            &self.parts.plant_den * &self.parts.pade_den,
            self.parts.charpoly.clone(),
        )
        .expect("nonzero charpoly")
    }

    /// `Su(s)/s = Cn Pd D / (s char)`: the control signal after a unit set-point
    /// step. Biproper; its feedthrough is the derivative impulse weight.
    pub fn su_over_s(&self) -> RationalTF {
        self.su.integrate()
    }

    /// The Pade-form open loop `G C`.
    pub fn loop_tf(&self) -> RationalTF {
        RationalTF::new(
            &self.parts.ctrl_num.scale(self.model.gain) * &self.parts.pade_num,
            &self.parts.plant_den.shift(1) * &self.parts.pade_den,
        )
        .expect("nonzero open-loop denominator")
    }

    /// Value at `j omega` with the delay applied exactly instead of through Pade.
    pub fn exact_response(&self, which: Sensitivity, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        let g = self.model.gain / self.parts.plant_den.eval_complex(s)
            * Complex64::from_polar(1.0, -omega * self.model.delay);
        let c = self.parts.ctrl_num.eval_complex(s) / s;
        let se = 1.0 / (1.0 + g * c);
        match which {
            Sensitivity::Se => se,
            Sensitivity::T => g * c * se,
            Sensitivity::Sd => g * se,
            Sensitivity::Su => c * se,
        }
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::margins::{margins, DelayTreatment};
use super::norms::{h2_norm, hinf_norm, require_stable};
use super::sensitivity::SensitivitySet;
use crate::error::{Error, Result};
use crate::placement::{PidGains, DESIGN_PADE_ORDER};
use crate::plant::SoptdModel;
use crate::polytf::{realize, simulate, Input, RationalTF};

/// Time-domain settings. Unset fields resolve per plant to
/// `horizon = 50 (L + T)` and `dt = min(L, T) / 200`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub npade: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            dt: None,
            npade: DESIGN_PADE_ORDER,
        }
    }
}

impl SimulationConfig {
    /// `(horizon, dt)` for this plant.
    pub fn resolve(&self, model: &SoptdModel) -> Result<(f64, f64)> {
        let horizon = self.horizon.unwrap_or(50.0 * (model.delay + model.lag));
        let dt = self.dt.unwrap_or(model.delay.min(model.lag) / 200.0);
        if !(dt > 0.0 && dt.is_finite()) || !(horizon > dt && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < dt < horizon, got dt = {dt}, horizon = {horizon}"
            )));
        }
        if self.npade == 0 {
            return Err(Error::OrderOutOfRange {
                order: 0,
                min: 1,
                max: crate::pade::MAX_ORDER,
            });
        }
        Ok((horizon, dt))
    }
}

/// L2 and L-infinity of the control signal after a unit set-point step, over
/// `[0, horizon]`, with the `t = 0` derivative impulse split off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSignalNorms {
    pub l2: f64,
    pub linf: f64,
    /// Weight of the Dirac term at `t = 0`, the feedthrough of `Su(s)/s`.
    pub impulse_weight: f64,
    pub horizon: f64,
    pub dt: f64,
}

/// Step-response norms of a proper control sensitivity `su`: the inverse
/// transform of `su(s)/s`, which is biproper when `su` is improper by one.
pub fn effort_norms(su: &RationalTF, horizon: f64, dt: f64) -> Result<ControlSignalNorms> {
    if su.num().is_zero() {
        return Ok(ControlSignalNorms {
            l2: 0.0,
            linf: 0.0,
            impulse_weight: 0.0,
            horizon,
            dt,
        });
    }
    let ss = realize(&su.integrate())?;
    let sim = simulate(&ss, Input::Impulse, dt, horizon)?;
    Ok(ControlSignalNorms {
        l2: sim.l2(),
        linf: sim.linf(),
        impulse_weight: sim.impulse_weight,
        horizon: sim.horizon(),
        dt,
    })
}

pub fn control_signal_norms(
    model: &SoptdModel,
    gains: &PidGains,
    cfg: &SimulationConfig,
) -> Result<ControlSignalNorms> {
    let (horizon, dt) = cfg.resolve(model)?;
    let set = SensitivitySet::new(model, gains, cfg.npade)?;
    require_stable(&set.t)?;
    effort_norms(&set.su, horizon, dt)
}

pub const METRIC_NAMES: [&str; 11] = [
    "J2d", "Jinf_d", "J2u", "Jinf_u", "J2n", "Jinf_n", "J2e", "Jinf_e", "Gm", "PhiM", "omega_gc",
];

/// The eleven closed-loop performance measures.
///
/// `gm` is `None` when the phase never reaches -180 deg (infinite margin);
/// `phim_deg` and `omega_gc` are `None` without a gain crossover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerformanceReport {
    pub j2_d: f64,
    pub jinf_d: f64,
    pub j2_u: f64,
    pub jinf_u: f64,
    pub j2_n: f64,
    pub jinf_n: f64,
    pub j2_e: f64,
    pub jinf_e: f64,
    pub gm: Option<f64>,
    pub phim_deg: Option<f64>,
    pub omega_gc: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub npade: usize,
}

impl PerformanceReport {
    /// Metric values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 11] {
        [
            Some(self.j2_d),
            Some(self.jinf_d),
            Some(self.j2_u),
            Some(self.jinf_u),
            Some(self.j2_n),
            Some(self.jinf_n),
            Some(self.j2_e),
            Some(self.jinf_e),
            self.gm,
            self.phim_deg,
            self.omega_gc,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_none_or(f64::is_finite))
    }
}

/// All eleven metrics, every one evaluated on the loop with the order
/// `cfg.npade` Pade approximant of the delay.
///
/// Disturbance and tracking norms weight by `1/s` (step inputs): `J2d`, `Jinf_d`
/// use `Sd/s`, `J2e`, `Jinf_e` use `Se/s`; `J2n`, `Jinf_n` use `T` unweighted.
pub fn performance_report(
    model: &SoptdModel,
    gains: &PidGains,
    cfg: &SimulationConfig,
) -> Result<PerformanceReport> {
    let (horizon, dt) = cfg.resolve(model)?;
    let set = SensitivitySet::new(model, gains, cfg.npade)?;
    require_stable(&set.t)?;
    let sd = set.sd_over_s();
    let se = set.se_over_s();
    let u = effort_norms(&set.su, horizon, dt)?;
    let m = margins(model, gains, DelayTreatment::Pade(cfg.npade))?;
    Ok(PerformanceReport {
        j2_d: h2_norm(&sd, 0.0)?,
        jinf_d: hinf_norm(&sd, 0.0)?,
        j2_u: u.l2,
        jinf_u: u.linf,
        j2_n: h2_norm(&set.t, 0.0)?,
        jinf_n: hinf_norm(&set.t, 0.0)?,
        j2_e: h2_norm(&se, 0.0)?,
        jinf_e: hinf_norm(&se, 0.0)?,
        gm: m.gain_margin.is_finite().then_some(m.gain_margin),
        phim_deg: m.phase_margin_deg,
        omega_gc: m.omega_gc,
        horizon: u.horizon,
        dt,
        npade: cfg.npade,
    })
}

/// [`performance_report`] over many loops in parallel, in input order.
pub fn performance_reports(
    loops: &[(SoptdModel, PidGains)],
    cfg: &SimulationConfig,
) -> Vec<Result<PerformanceReport>> {
    loops
        .par_iter()
        .map(|(m, g)| performance_report(m, g, cfg))
        .collect()
}

/// Pearson correlation between every pair of metrics across reports.
///
/// Reports missing either value of a pair are dropped for that pair only. An
/// entry is `None` when fewer than two reports remain or either metric is
/// constant over them.
#[allow(clippy::needless_range_loop)] // symmetric fill
pub fn correlation_matrix(reports: &[PerformanceReport]) -> Result<Vec<Vec<Option<f64>>>> {
    if reports.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "correlation needs at least 2 reports, got {}",
            reports.len()
        )));
    }
    let cols: Vec<[Option<f64>; 11]> = reports.iter().map(PerformanceReport::values).collect();
    let column = |j: usize| -> Vec<Option<f64>> { cols.iter().map(|r| r[j]).collect() };
    let mut out = vec![vec![None; 11]; 11];
    for i in 0..11 {
        for j in i..11 {
            let mut r = pearson(&column(i), &column(j));
            if i == j {
                r = r.map(|_| 1.0);
            }
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

fn pearson(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x / n, sy + y / n));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

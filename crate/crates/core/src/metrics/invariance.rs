use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::SimulationConfig;
use super::sensitivity::SensitivitySet;
use crate::error::Result;
use crate::placement::{PidGains, DESIGN_PADE_ORDER, STABILITY_MARGIN};
use crate::plant::SoptdModel;
use crate::polytf::{max_real_part, realize, roots, simulate, Input};

/// Closed-loop behaviour at one Pade order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderResponse {
    pub order: usize,
    pub stable: bool,
    pub max_real_part: f64,
    /// Complex pole with positive imaginary part and the largest real part.
    pub dominant: Option<Complex64>,
    pub damping: Option<f64>,
    /// Unit set-point step response (`T`); empty when unstable.
    pub setpoint: Vec<f64>,
    /// Unit step disturbance response (`Sd`); empty when unstable.
    pub disturbance: Vec<f64>,
    /// `max |y_r - y_ref|` against the reference order, when both are stable.
    pub setpoint_deviation: Option<f64>,
    pub disturbance_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceStudy {
    pub reference_order: usize,
    pub dt: f64,
    pub horizon: f64,
    pub orders: Vec<OrderResponse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceSummary {
    pub order: usize,
    pub stable: bool,
    pub max_real_part: f64,
    pub dominant_re: Option<f64>,
    pub dominant_im: Option<f64>,
    pub damping: Option<f64>,
    pub setpoint_deviation: Option<f64>,
    pub disturbance_deviation: Option<f64>,
}

impl InvarianceStudy {
    pub fn summary(&self) -> Vec<InvarianceSummary> {
        self.orders
            .iter()
            .map(|o| InvarianceSummary {
                order: o.order,
                stable: o.stable,
                max_real_part: o.max_real_part,
                dominant_re: o.dominant.map(|z| z.re),
                dominant_im: o.dominant.map(|z| z.im),
                damping: o.damping,
                setpoint_deviation: o.setpoint_deviation,
                disturbance_deviation: o.disturbance_deviation,
            })
            .collect()
    }

    /// Largest relative spread `(max - min) / min` of the dominant damping
    /// over the stable orders, or `None` if any order lacks a complex pair.
    pub fn damping_drift(&self) -> Option<f64> {
        let z: Option<Vec<f64>> = self
            .orders
            .iter()
            .filter(|o| o.stable)
            .map(|o| o.damping)
            .collect();
        let z = z?;
        let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo.is_finite() && lo > 0.0).then(|| (hi - lo) / lo)
    }

    pub fn max_setpoint_deviation(&self) -> Option<f64> {
        self.orders
            .iter()
            .filter_map(|o| o.setpoint_deviation)
            .reduce(f64::max)
    }
}

fn dominant_pair(poles: &[Complex64]) -> Option<Complex64> {
    poles
        .iter()
        .filter(|z| z.im > 1e-9 * z.norm().max(1.0))
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn respond(
    model: &SoptdModel,
    gains: &PidGains,
    order: usize,
    dt: f64,
    horizon: f64,
) -> Result<OrderResponse> {
    let set = SensitivitySet::new(model, gains, order)?;
    let poles = roots(set.charpoly())?;
    let mrp = max_real_part(&poles).unwrap_or(f64::NEG_INFINITY);
    let stable = mrp < STABILITY_MARGIN;
    let dominant = dominant_pair(&poles);
    let (setpoint, disturbance) = if stable {
        let y = simulate(&realize(&set.t)?, Input::Step, dt, horizon)?.values;
        let d = simulate(&realize(&set.sd)?, Input::Step, dt, horizon)?.values;
        (y, d)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(OrderResponse {
        order,
        stable,
        max_real_part: mrp,
        dominant,
        damping: dominant.map(|z| -z.re / z.norm()),
        setpoint,
        disturbance,
        setpoint_deviation: None,
        disturbance_deviation: None,
    })
}

/// Step responses and dominant poles of the same PID loop with the delay
/// replaced by Pade approximants of each order in `orders`, compared against
/// the design order 3. An unstable order is flagged rather than fatal.
pub fn pade_invariance(
    model: &SoptdModel,
    gains: &PidGains,
    orders: &[usize],
    cfg: &SimulationConfig,
) -> Result<InvarianceStudy> {
    let (horizon, dt) = cfg.resolve(model)?;
    let reference = respond(model, gains, DESIGN_PADE_ORDER, dt, horizon)?;
    let mut out: Vec<OrderResponse> = orders
        .par_iter()
        .map(|&r| respond(model, gains, r, dt, horizon))
        .collect::<Result<_>>()?;
    if reference.stable {
        for o in out.iter_mut().filter(|o| o.stable) {
            o.setpoint_deviation = Some(max_abs_diff(&o.setpoint, &reference.setpoint));
            o.disturbance_deviation = Some(max_abs_diff(&o.disturbance, &reference.disturbance));
        }
    }
    Ok(InvarianceStudy {
        reference_order: DESIGN_PADE_ORDER,
        dt,
        horizon,
        orders: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{benchmark, BenchmarkId};

    #[test]
    fn same_order_has_zero_deviation() {
        let m = benchmark(BenchmarkId::new(5).unwrap());
        let g = PidGains::new(0.3531, 0.3623, 1.0217);
        let s = pade_invariance(&m, &g, &[3, 3], &SimulationConfig::default()).unwrap();
        assert_eq!(s.orders.len(), 2);
        for o in &s.orders {
            assert!(o.stable);
            assert_eq!(o.setpoint_deviation, Some(0.0));
            assert_eq!(o.disturbance_deviation, Some(0.0));
        }
        assert_eq!(s.damping_drift(), Some(0.0));
    }

    #[test]
    fn setpoint_settles_to_one() {
        let m = benchmark(BenchmarkId::new(5).unwrap());
        let g = PidGains::new(0.3531, 0.3623, 1.0217);
        let s = pade_invariance(&m, &g, &[5], &SimulationConfig::default()).unwrap();
        let y = &s.orders[0].setpoint;
        assert!((y.last().unwrap() - 1.0).abs() < 1e-3);
        assert!(s.orders[0].disturbance.last().unwrap().abs() < 1e-3);
    }
}

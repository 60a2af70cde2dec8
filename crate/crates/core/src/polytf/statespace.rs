use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use super::{Polynomial, RationalTF};
use crate::error::{Error, Result};

/// Largest `dt * spectral_radius` accepted by [`simulate`]. Classical RK4 is
/// stable on the negative real axis up to about 2.785 and on the imaginary
/// axis up to about 2.83, so 2.5 leaves a little headroom.
pub const RK4_STABILITY_LIMIT: f64 = 2.5;

/// Single-input single-output realization `x' = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// `C (sI - A)^-1 B + D` at a complex point.
    pub fn eval(&self, s: Complex64) -> Option<Complex64> {
        let n = self.order();
        if n == 0 {
            return Some(Complex64::new(self.d, 0.0));
        }
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = self.b.map(|x| Complex64::new(x, 0.0));
        let x = m.lu().solve(&rhs)?;
        let y: Complex64 = self.c.iter().zip(x.iter()).map(|(c, x)| x * *c).sum();
        Some(y + self.d)
    }

    pub fn spectral_radius(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.a
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Controllable canonical realization. A biproper system is first split by
/// long division into `D + remainder`.
pub fn realize(sys: &RationalTF) -> Result<StateSpace> {
    let nd = sys.den_degree();
    if let Some(nn) = sys.num_degree() {
        if nn > nd {
            return Err(Error::Improper { excess: nn - nd });
        }
    }
    let lead = sys.den().leading();
    let den = sys.den().scale(1.0 / lead);
    let num = sys.num().scale(1.0 / lead);
    let (q, rem) = if nd == 0 {
        (num.clone(), Polynomial::zero())
    } else {
        num.div_rem(&den)
    };
    let d = q.coeff(0);
    let a = DMatrix::from_fn(nd, nd, |i, j| {
        if i + 1 == nd {
            -den.coeff(j)
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut b = DVector::zeros(nd);
    if nd > 0 {
        b[nd - 1] = 1.0;
    }
    let c = RowDVector::from_fn(nd, |_, j| rem.coeff(j));
    Ok(StateSpace { a, b, c, d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    /// Unit step from t = 0.
    Step,
    /// Dirac impulse at t = 0, applied as `x(0) = B`.
    Impulse,
}

/// Uniformly sampled output trace `values[k] = y(k dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub dt: f64,
    pub values: Vec<f64>,
    /// Weight of the `D * delta(t)` term of an impulse response. It is never
    /// part of `values`; zero for step inputs.
    pub impulse_weight: f64,
}

impl Simulation {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    /// Trapezoidal L2 norm over the sampled horizon.
    pub fn l2(&self) -> f64 {
        let v = &self.values;
        if v.len() < 2 {
            return 0.0;
        }
        let inner: f64 = v[1..v.len() - 1].iter().map(|y| y * y).sum();
        let ends = 0.5 * (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]);
        ((inner + ends) * self.dt).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, y| m.max(y.abs()))
    }
}

/// Fixed-step classical RK4 over `[0, horizon]`, sampled every `dt`.
///
/// The number of steps is `round(horizon / dt)`. The step is rejected when
/// `dt * spectral_radius(A)` exceeds [`RK4_STABILITY_LIMIT`].
pub fn simulate(ss: &StateSpace, input: Input, dt: f64, horizon: f64) -> Result<Simulation> {
    if !(dt > 0.0) || !(horizon > dt) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "simulation needs 0 < dt < horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let rho = ss.spectral_radius();
    if dt * rho > RK4_STABILITY_LIMIT {
        return Err(Error::UnstableIntegration {
            dt,
            spectral_radius: rho,
            suggested_dt: RK4_STABILITY_LIMIT / rho,
        });
    }
    let n = ss.order();
    let steps = (horizon / dt).round() as usize;
    let a: Vec<f64> = (0..n * n).map(|k| ss.a[(k / n, k % n)]).collect();
    let b: Vec<f64> = ss.b.iter().copied().collect();
    let c: Vec<f64> = ss.c.iter().copied().collect();
    let u = match input {
        Input::Step => 1.0,
        Input::Impulse => 0.0,
    };
    let feed = ss.d * u;

    let f = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            out[i] = row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b[i] * u;
        }
    };
    let output = |x: &[f64]| c.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + feed;

    let mut x = match input {
        Input::Step => vec![0.0; n],
        Input::Impulse => b.clone(),
    };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut values = Vec::with_capacity(steps + 1);
    values.push(output(&x));
    for _ in 0..steps {
        f(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        values.push(output(&x));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "simulation produced non-finite output".into(),
        ));
    }
    Ok(Simulation {
        dt,
        values,
        impulse_weight: match input {
            Input::Impulse => ss.d,
            Input::Step => 0.0,
        },
    })
}

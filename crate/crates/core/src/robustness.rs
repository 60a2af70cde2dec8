//! Fixed gains against perturbed plants: Monte Carlo sweeps, the largest
//! tolerable perturbation and two-parameter performance grids.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{performance_report, PerformanceReport, SimulationConfig, METRIC_NAMES};
use crate::placement::{closedloop_poles, PidGains, DESIGN_PADE_ORDER, STABILITY_MARGIN};
use crate::plant::{perturb, SoptdModel};
use crate::polytf::max_real_part;

/// Largest closed-loop real part at the design Pade order.
pub fn stability_abscissa(model: &SoptdModel, gains: &PidGains) -> Result<f64> {
    let poles = closedloop_poles(model, gains, DESIGN_PADE_ORDER)?;
    Ok(max_real_part(&poles).expect("closed loop has poles"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRow {
    pub index: u64,
    pub model: SoptdModel,
    pub stable: bool,
    pub max_real_part: f64,
    /// `None` for unstable rows, or when a metric could not be evaluated
    /// (then `error` says why).
    pub report: Option<PerformanceReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationStudy {
    pub nominal: SoptdModel,
    pub gains: PidGains,
    pub pct: f64,
    pub seed: u64,
    pub rows: Vec<PerturbationRow>,
}

impl PerturbationStudy {
    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_unstable(&self) -> usize {
        self.rows.iter().filter(|r| !r.stable).count()
    }
}

/// `n` plants with `L`, `T`, `zeta` jointly perturbed by up to `pct`, each
/// checked for closed-loop stability and, when stable, fully reported.
pub fn perturbation_sweep(
    model: &SoptdModel,
    gains: &PidGains,
    pct: f64,
    n: usize,
    seed: u64,
    cfg: &SimulationConfig,
) -> Result<PerturbationStudy> {
    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let m = perturb(model, pct, seed, i)?;
            let a = stability_abscissa(&m, gains)?;
            let stable = a < STABILITY_MARGIN;
            let (report, error) = if stable {
                match performance_report(&m, gains, cfg) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            Ok(PerturbationRow {
                index: i,
                model: m,
                stable,
                max_real_part: a,
                report,
                error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerturbationStudy {
        nominal: *model,
        gains: *gains,
        pct,
        seed,
        rows,
    })
}

/// Number of unstable loops among `n` perturbed plants; no metrics.
pub fn count_unstable(
    model: &SoptdModel,
    gains: &PidGains,
    pct: f64,
    n: usize,
    seed: u64,
) -> Result<usize> {
    let flags = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let m = perturb(model, pct, seed, i)?;
            Ok(stability_abscissa(&m, gains)? >= STABILITY_MARGIN)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(flags.into_iter().filter(|&u| u).count())
}

/// Largest `k * step` (below 1) at which all `n` perturbed loops are stable,
/// scanning upward from `step` and stopping at the first failure. The same
/// random streams are reused at every level, so samples only scale outward.
pub fn max_allowable_perturbation(
    model: &SoptdModel,
    gains: &PidGains,
    step: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::InvalidInput(format!(
            "step must lie in (0, 1), got {step}"
        )));
    }
    let poles = closedloop_poles(model, gains, DESIGN_PADE_ORDER)?;
    if max_real_part(&poles).expect("nonempty") >= STABILITY_MARGIN {
        return Err(Error::Unstable { poles });
    }
    let mut best = 0.0;
    for k in 1.. {
        // rounded so reported levels print cleanly
        let pct = (k as f64 * step * 1e12).round() / 1e12;
        if pct >= 1.0 - 1e-12 {
            break;
        }
        if count_unstable(model, gains, pct, n, seed)? > 0 {
            break;
        }
        best = pct;
    }
    Ok(best)
}

/// The two plant parameters varied on an iso-performance grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamPair {
    LT,
    LZeta,
    TZeta,
}

impl ParamPair {
    pub const ALL: [Self; 3] = [Self::LT, Self::LZeta, Self::TZeta];

    pub fn names(self) -> (&'static str, &'static str) {
        match self {
            Self::LT => ("L", "T"),
            Self::LZeta => ("L", "zeta_ol"),
            Self::TZeta => ("T", "zeta_ol"),
        }
    }

    fn apply(self, m: &SoptdModel, a: f64, b: f64) -> Result<SoptdModel> {
        let (delay, lag, zeta) = match self {
            Self::LT => (m.delay * a, m.lag * b, m.zeta),
            Self::LZeta => (m.delay * a, m.lag, m.zeta * b),
            Self::TZeta => (m.delay, m.lag * a, m.zeta * b),
        };
        SoptdModel::new(m.gain, delay, lag, zeta)
    }

    fn values(self, m: &SoptdModel) -> (f64, f64) {
        match self {
            Self::LT => (m.delay, m.lag),
            Self::LZeta => (m.delay, m.zeta),
            Self::TZeta => (m.lag, m.zeta),
        }
    }
}

impl fmt::Display for ParamPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.names();
        write!(f, "{a},{b}")
    }
}

impl FromStr for ParamPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "lt" => Ok(Self::LT),
            "lzeta" | "lzetaol" => Ok(Self::LZeta),
            "tzeta" | "tzetaol" => Ok(Self::TZeta),
            _ => Err(Error::Parse(format!(
                "unknown parameter pair {s:?}; expected L,T or L,zeta or T,zeta"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// Absolute values of the two varied parameters.
    pub param1: f64,
    pub param2: f64,
    pub stable: bool,
    pub report: Option<PerformanceReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoGrid {
    pub pair: ParamPair,
    pub n: usize,
    /// Row-major: `cells[i * n + j]` has the `i`-th value of the first
    /// parameter and the `j`-th of the second.
    pub cells: Vec<GridCell>,
}

fn factors(pct: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 1.0 - pct + 2.0 * pct * i as f64 / (n - 1) as f64)
        .collect()
}

/// Uniform `n x n` grid over `[1 - pct, 1 + pct]` times the nominal values of
/// the chosen pair, the third parameter at nominal; all metrics per cell.
pub fn iso_performance_grid(
    model: &SoptdModel,
    gains: &PidGains,
    pct: f64,
    n: usize,
    pair: ParamPair,
    cfg: &SimulationConfig,
) -> Result<IsoGrid> {
    if n == 0 {
        return Err(Error::InvalidInput("grid size must be positive".into()));
    }
    if !(0.0..1.0).contains(&pct) {
        return Err(Error::InvalidInput(format!(
            "perturbation must lie in [0, 1), got {pct}"
        )));
    }
    let f = factors(pct, n);
    let cells = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let m = pair.apply(model, f[k / n], f[k % n])?;
            let (param1, param2) = pair.values(&m);
            let stable = stability_abscissa(&m, gains)? < STABILITY_MARGIN;
            let report = if stable {
                Some(performance_report(&m, gains, cfg)?)
            } else {
                None
            };
            Ok(GridCell {
                param1,
                param2,
                stable,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IsoGrid { pair, n, cells })
}

/// CSV with header `param1,param2,stable,<metrics>`; metrics of unstable
/// cells and absent margins are empty fields.
pub fn write_grid_csv<W: Write>(grid: &IsoGrid, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["param1", "param2", "stable"];
    header.extend(METRIC_NAMES);
    wr.write_record(&header).map_err(io)?;
    for c in &grid.cells {
        let mut rec = vec![
            c.param1.to_string(),
            c.param2.to_string(),
            c.stable.to_string(),
        ];
        match &c.report {
            Some(r) => rec.extend(
                r.values()
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            ),
            None => rec.extend(std::iter::repeat_n(String::new(), METRIC_NAMES.len())),
        }
        wr.write_record(&rec).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(())
}

/// Parsed row of [`write_grid_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridRecord {
    pub param1: f64,
    pub param2: f64,
    pub stable: bool,
    pub metrics: [Option<f64>; 11],
}

pub fn read_grid_csv<R: std::io::Read>(r: R) -> Result<Vec<GridRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(io)?.clone();
    if header.len() != 3 + METRIC_NAMES.len() || &header[0] != "param1" || &header[2] != "stable" {
        return Err(Error::Parse(format!("unexpected grid header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad number {s:?}")))
    };
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(io)?;
            let mut metrics = [None; 11];
            for (k, m) in metrics.iter_mut().enumerate() {
                let s = &rec[3 + k];
                *m = if s.is_empty() { None } else { Some(num(s)?) };
            }
            Ok(GridRecord {
                param1: num(&rec[0])?,
                param2: num(&rec[1])?,
                stable: rec[2]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad flag {:?}", &rec[2])))?,
                metrics,
            })
        })
        .collect()
}

fn io(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{benchmark, BenchmarkId};

    fn g5() -> (SoptdModel, PidGains) {
        (
            benchmark(BenchmarkId::new(5).unwrap()),
            PidGains::new(0.3531, 0.3623, 1.0217),
        )
    }

    #[test]
    fn zero_pct_rows_are_nominal() {
        let (m, g) = g5();
        let cfg = SimulationConfig::default();
        let s = perturbation_sweep(&m, &g, 0.0, 3, 42, &cfg).unwrap();
        let nominal = performance_report(&m, &g, &cfg).unwrap();
        assert_eq!(s.n_unstable(), 0);
        for r in &s.rows {
            assert_eq!(r.model, m);
            assert_eq!(r.report, Some(nominal));
        }
    }

    #[test]
    fn single_cell_grid_is_nominal() {
        let (m, g) = g5();
        let cfg = SimulationConfig::default();
        let grid = iso_performance_grid(&m, &g, 0.4, 1, ParamPair::LT, &cfg).unwrap();
        assert_eq!(grid.cells.len(), 1);
        assert_eq!(
            (grid.cells[0].param1, grid.cells[0].param2),
            (m.delay, m.lag)
        );
        assert_eq!(
            grid.cells[0].report,
            Some(performance_report(&m, &g, &cfg).unwrap())
        );
    }

    #[test]
    fn grid_csv_round_trip() {
        let (m, g) = g5();
        let grid = iso_performance_grid(
            &m,
            &g,
            0.3,
            2,
            ParamPair::TZeta,
            &SimulationConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("param1,param2,stable,J2d,"));
        let back = read_grid_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 4);
        for (r, c) in back.iter().zip(&grid.cells) {
            assert_eq!(
                (r.param1, r.param2, r.stable),
                (c.param1, c.param2, c.stable)
            );
            assert_eq!(r.metrics, c.report.unwrap().values());
        }
    }

    #[test]
    fn pair_parsing() {
        assert_eq!("L,T".parse::<ParamPair>().unwrap(), ParamPair::LT);
        assert_eq!("t,zeta_ol".parse::<ParamPair>().unwrap(), ParamPair::TZeta);
        assert!("K,T".parse::<ParamPair>().is_err());
    }

    #[test]
    fn unstable_nominal_is_rejected() {
        let (m, _) = g5();
        let g = PidGains::new(10.0, 10.0, 10.0);
        assert!(matches!(
            max_allowable_perturbation(&m, &g, 0.05, 10, 1),
            Err(Error::Unstable { .. })
        ));
    }
}

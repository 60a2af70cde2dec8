//! Monte Carlo sampling of the design space `{m, zeta_cl, omega_cl}`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::{
    closed_loop_charpoly, desired_charpoly, solve_against, DesignSpec, KpSource,
    NonDominantPoleType, PidGains, DESIGN_PADE_ORDER, STABILITY_MARGIN,
};
use crate::plant::SoptdModel;
use crate::polytf::{max_real_part, roots};
use crate::rng::{CounterRng, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRanges {
    pub m: Interval,
    pub zeta_cl: Interval,
    pub omega_cl: Interval,
}

impl Default for DesignRanges {
    fn default() -> Self {
        Self {
            m: Interval { lo: 1.0, hi: 10.0 },
            zeta_cl: Interval { lo: 1.0, hi: 5.0 },
            omega_cl: Interval { lo: 1.0, hi: 10.0 },
        }
    }
}

impl DesignRanges {
    pub fn validate(&self) -> Result<()> {
        for iv in [self.m, self.zeta_cl, self.omega_cl] {
            Interval::new(iv.lo, iv.hi)?;
        }
        if self.m.lo < 1.0 || self.zeta_cl.lo <= 0.0 || self.omega_cl.lo <= 0.0 {
            return Err(Error::InvalidInput(
                "ranges must keep m >= 1, zeta_cl > 0, omega_cl > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceOutcome {
    pub gains: PidGains,
    pub stable: bool,
    pub max_real_part: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSample {
    pub spec: DesignSpec,
    /// Indexed by [`KpSource::index`].
    pub outcomes: [SourceOutcome; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionDataset {
    pub plant: String,
    pub model: SoptdModel,
    pub ptype: NonDominantPoleType,
    pub ranges: DesignRanges,
    pub seed: u64,
    pub samples: Vec<RegionSample>,
    pub stable_counts: [usize; 4],
}

impl RegionDataset {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn percent_volume(&self, src: KpSource) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        100.0 * self.stable_counts[src.index()] as f64 / self.samples.len() as f64
    }

    /// Stabilizing gain triples for one Kp expression, in sample order.
    pub fn stable_gains(&self, src: KpSource) -> Vec<PidGains> {
        self.samples
            .iter()
            .map(|s| s.outcomes[src.index()])
            .filter(|o| o.stable)
            .map(|o| o.gains)
            .collect()
    }
}

/// Gains for every Kp expression plus the Pade-3 stability verdict.
pub fn evaluate_spec(
    model: &SoptdModel,
    spec: &DesignSpec,
    ptype: NonDominantPoleType,
) -> Result<RegionSample> {
    let target = desired_charpoly(spec, ptype);
    let outcome = |src: KpSource| -> Result<SourceOutcome> {
        let gains = solve_against(model, &target, src)?;
        let poles = roots(&closed_loop_charpoly(model, &gains, DESIGN_PADE_ORDER)?)?;
        let mrp = max_real_part(&poles).expect("closed loop has degree >= 3");
        Ok(SourceOutcome {
            gains,
            stable: mrp < STABILITY_MARGIN,
            max_real_part: mrp,
        })
    };
    Ok(RegionSample {
        spec: *spec,
        outcomes: [
            outcome(KpSource::S1)?,
            outcome(KpSource::S2)?,
            outcome(KpSource::S3)?,
            outcome(KpSource::S4)?,
        ],
    })
}

/// Draws `n_samples` specs uniformly in `ranges`; sample `i` uses stream
/// `(seed, i)` and draws `m`, `zeta_cl`, `omega_cl` in that order.
pub fn sample_region(
    plant: &str,
    model: &SoptdModel,
    ptype: NonDominantPoleType,
    ranges: &DesignRanges,
    n_samples: usize,
    seed: u64,
) -> Result<RegionDataset> {
    model.validate()?;
    ranges.validate()?;
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = CounterRng::new(seed, Domain::Explore, i as u64);
            let m = rng.uniform(ranges.m.lo, ranges.m.hi);
            let z = rng.uniform(ranges.zeta_cl.lo, ranges.zeta_cl.hi);
            let w = rng.uniform(ranges.omega_cl.lo, ranges.omega_cl.hi);
            let spec = DesignSpec {
                m,
                zeta_cl: z,
                omega_cl: w,
            };
            evaluate_spec(model, &spec, ptype)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut stable_counts = [0usize; 4];
    for s in &samples {
        for (c, o) in stable_counts.iter_mut().zip(&s.outcomes) {
            *c += o.stable as usize;
        }
    }
    Ok(RegionDataset {
        plant: plant.to_string(),
        model: *model,
        ptype,
        ranges: *ranges,
        seed,
        samples,
        stable_counts,
    })
}

/// Kp expression with the most stable samples; ties go to the lowest index.
pub fn best_expression(dataset: &RegionDataset) -> Result<KpSource> {
    best_of_counts(&dataset.stable_counts)
}

pub fn best_of_counts(counts: &[usize; 4]) -> Result<KpSource> {
    let mut best = KpSource::S1;
    for src in KpSource::ALL {
        if counts[src.index()] > counts[best.index()] {
            best = src;
        }
    }
    if counts[best.index()] == 0 {
        return Err(Error::NoStableRegion);
    }
    Ok(best)
}

/// One exported design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub m: f64,
    pub zeta_cl: f64,
    pub omega_cl: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub stable: bool,
    pub max_real_part: f64,
}

impl RegionRecord {
    pub fn gains(&self) -> PidGains {
        PidGains::new(self.kp, self.ki, self.kd)
    }
}

pub const REGION_HEADER: [&str; 8] = [
    "m",
    "zeta_cl",
    "omega_cl",
    "kp",
    "ki",
    "kd",
    "stable",
    "max_real_part",
];

pub fn export_region(
    dataset: &RegionDataset,
    which: KpSource,
    stable_only: bool,
) -> Vec<RegionRecord> {
    dataset
        .samples
        .iter()
        .map(|s| {
            let o = s.outcomes[which.index()];
            RegionRecord {
                m: s.spec.m,
                zeta_cl: s.spec.zeta_cl,
                omega_cl: s.spec.omega_cl,
                kp: o.gains.kp,
                ki: o.gains.ki,
                kd: o.gains.kd,
                stable: o.stable,
                max_real_part: o.max_real_part,
            }
        })
        .filter(|r| !stable_only || r.stable)
        .collect()
}

fn record_fields(r: &RegionRecord) -> [String; 8] {
    // `{}` on f64 prints the shortest string that parses back to the same bits
    [
        r.m.to_string(),
        r.zeta_cl.to_string(),
        r.omega_cl.to_string(),
        r.kp.to_string(),
        r.ki.to_string(),
        r.kd.to_string(),
        r.stable.to_string(),
        r.max_real_part.to_string(),
    ]
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_region_csv<W: Write>(w: W, records: &[RegionRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REGION_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record(record_fields(r)).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

/// Same layout with a leading `group` column.
pub fn write_grouped_region_csv<W: Write>(
    w: W,
    groups: &[(String, Vec<RegionRecord>)],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["group"];
    header.extend(REGION_HEADER);
    out.write_record(&header).map_err(csv_err)?;
    for (g, records) in groups {
        for r in records {
            let f = record_fields(r);
            out.write_record(std::iter::once(g.as_str()).chain(f.iter().map(|s| s.as_str())))
                .map_err(csv_err)?;
        }
    }
    out.flush().map_err(csv_err)
}

/// Reads the plain export back. Extra columns such as `group` are ignored.
pub fn read_region_csv<R: Read>(r: R) -> Result<Vec<RegionRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<RegionRecord>()
        .map(|row| row.map_err(csv_err))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{benchmark, BenchmarkId};

    fn g5() -> SoptdModel {
        benchmark(BenchmarkId::new(5).unwrap())
    }

    #[test]
    fn empty_dataset() {
        let d = sample_region(
            "G5",
            &g5(),
            NonDominantPoleType::AllReal,
            &DesignRanges::default(),
            0,
            1,
        )
        .unwrap();
        assert_eq!(d.n_samples(), 0);
        assert_eq!(d.stable_counts, [0; 4]);
        assert_eq!(d.percent_volume(KpSource::S1), 0.0);
        assert!(matches!(best_expression(&d), Err(Error::NoStableRegion)));
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &export_region(&d, KpSource::S1, false)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "m,zeta_cl,omega_cl,kp,ki,kd,stable,max_real_part\n"
        );
    }

    #[test]
    fn best_expression_ties() {
        assert_eq!(best_of_counts(&[503, 442, 33, 1]).unwrap(), KpSource::S1);
        assert_eq!(best_of_counts(&[7, 7, 1, 0]).unwrap(), KpSource::S1);
        assert_eq!(best_of_counts(&[0, 2, 9, 9]).unwrap(), KpSource::S3);
        assert!(matches!(
            best_of_counts(&[0; 4]),
            Err(Error::NoStableRegion)
        ));
    }

    #[test]
    fn deterministic_and_consistent() {
        let r = DesignRanges::default();
        let a = sample_region("G5", &g5(), NonDominantPoleType::AllComplex, &r, 300, 9).unwrap();
        let b = sample_region("G5", &g5(), NonDominantPoleType::AllComplex, &r, 300, 9).unwrap();
        assert_eq!(a, b);
        for src in KpSource::ALL {
            let n = a
                .samples
                .iter()
                .filter(|s| s.outcomes[src.index()].stable)
                .count();
            assert_eq!(n, a.stable_counts[src.index()]);
            assert_eq!(export_region(&a, src, false).len(), 300);
        }
        // a prefix of a longer run is the shorter run
        let c = sample_region("G5", &g5(), NonDominantPoleType::AllComplex, &r, 100, 9).unwrap();
        assert_eq!(&a.samples[..100], &c.samples[..]);
    }

    #[test]
    fn samples_lie_in_ranges() {
        let r = DesignRanges {
            m: Interval::new(2.0, 3.0).unwrap(),
            zeta_cl: Interval::new(0.5, 0.6).unwrap(),
            omega_cl: Interval::new(4.0, 4.5).unwrap(),
        };
        let d = sample_region("G5", &g5(), NonDominantPoleType::Mixed, &r, 50, 2).unwrap();
        for s in &d.samples {
            assert!((2.0..3.0).contains(&s.spec.m));
            assert!((0.5..0.6).contains(&s.spec.zeta_cl));
            assert!((4.0..4.5).contains(&s.spec.omega_cl));
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = sample_region(
            "G5",
            &g5(),
            NonDominantPoleType::AllReal,
            &DesignRanges::default(),
            40,
            3,
        )
        .unwrap();
        let recs = export_region(&d, KpSource::S2, false);
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &recs).unwrap();
        let back = read_region_csv(&buf[..]).unwrap();
        assert_eq!(back, recs);
        let mut buf = Vec::new();
        write_grouped_region_csv(&mut buf, &[("a".into(), recs.clone())]).unwrap();
        assert!(buf.starts_with(b"group,m,"));
        assert_eq!(read_region_csv(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn invalid_ranges() {
        let r = DesignRanges {
            m: Interval { lo: 3.0, hi: 2.0 },
            ..DesignRanges::default()
        };
        assert!(sample_region("G5", &g5(), NonDominantPoleType::AllReal, &r, 1, 0).is_err());
    }
}

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use polepid_core::cluster::{
    robust_gains_from_points, robust_gains_with, KMeansConfig, RobustGains,
};
use polepid_core::explorer::{
    best_expression, export_region, read_region_csv, sample_region, write_region_csv, DesignRanges,
};
use polepid_core::metrics::{
    performance_report, PerformanceReport, SensitivitySet, SimulationConfig,
};
use polepid_core::plant::{benchmark, DampingClass, DelayClass};
use polepid_core::polytf::{realize, simulate, Input};
use polepid_core::{BenchmarkId, KpSource, NonDominantPoleType};
use serde::{Deserialize, Serialize};

use crate::args::{CentroidCmd, DesignCmd, ExploreCmd, MetricsCmd, Signal, SimulateCmd};
use crate::common::{load_plant, Plant};
use crate::output::Sink;

#[derive(Debug, Serialize)]
struct BenchRow {
    id: String,
    #[serde(rename = "K")]
    gain: f64,
    #[serde(rename = "L")]
    delay: f64,
    #[serde(rename = "T")]
    lag: f64,
    zeta_ol: f64,
    l_over_t: f64,
    delay_class: DelayClass,
    damping_class: DampingClass,
}

pub fn bench_list(sink: &Sink) -> Result<()> {
    let rows: Vec<BenchRow> = BenchmarkId::ALL
        .iter()
        .map(|&id| {
            let m = benchmark(id);
            BenchRow {
                id: format!("G{}", id.index()),
                gain: m.gain,
                delay: m.delay,
                lag: m.lag,
                zeta_ol: m.zeta,
                l_over_t: m.l_over_t(),
                delay_class: id.delay_class(),
                damping_class: id.damping_class(),
            }
        })
        .collect();
    sink.table("bench", &rows)
}

/// Everything one design run needs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub plant: Plant,
    pub ptype: NonDominantPoleType,
    pub ranges: DesignRanges,
    pub n_samples: usize,
    pub seed: u64,
    pub k: usize,
    pub restarts: usize,
    pub sim: SimulationConfig,
    pub out: PathBuf,
}

/// Contents of `centroid.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CentroidFile {
    pub plant: String,
    /// Absent when the centroid came from an exported region file.
    pub ptype: Option<NonDominantPoleType>,
    pub seed: u64,
    pub source: KpSource,
    pub n_stable: usize,
    pub median_distance: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub max_real_part: f64,
}

impl CentroidFile {
    pub fn new(
        plant: &str,
        ptype: Option<NonDominantPoleType>,
        seed: u64,
        r: &RobustGains,
    ) -> Self {
        Self {
            plant: plant.to_string(),
            ptype,
            seed,
            source: r.source,
            n_stable: r.n_stable,
            median_distance: r.median_distance,
            kp: r.gains.kp,
            ki: r.gains.ki,
            kd: r.gains.kd,
            max_real_part: r.max_real_part,
        }
    }
}

#[derive(Debug, Serialize)]
struct Timings {
    explore_ms: f64,
    cluster_ms: f64,
    report_ms: f64,
    write_ms: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    plant: String,
    ptype: NonDominantPoleType,
    seed: u64,
    samples: usize,
    stable_counts: [usize; 4],
    best_source: KpSource,
    files: [&'static str; 3],
    timings: Timings,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Explore, cluster, verify and report; writes `region.csv`, `centroid.json`,
/// `report.json` and `summary.json` (the only file with timings).
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(RobustGains, PerformanceReport)> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let t = Instant::now();
    let ds = sample_region(
        &cfg.plant.label,
        &cfg.plant.model,
        cfg.ptype,
        &cfg.ranges,
        cfg.n_samples,
        cfg.seed,
    )?;
    let explore_ms = ms(t);

    let t = Instant::now();
    let kcfg = KMeansConfig {
        k: cfg.k,
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..KMeansConfig::default()
    };
    let robust = robust_gains_with(&ds, &kcfg)?;
    let cluster_ms = ms(t);

    let t = Instant::now();
    let report = performance_report(&cfg.plant.model, &robust.gains, &cfg.sim)?;
    let report_ms = ms(t);

    let t = Instant::now();
    let sink = Sink::new(Some(cfg.out.clone()), crate::args::Format::Json);
    sink.raw("region.csv", |w| {
        Ok(write_region_csv(
            w,
            &export_region(&ds, robust.source, false),
        )?)
    })?;
    sink.json(
        "centroid",
        &CentroidFile::new(&cfg.plant.label, Some(cfg.ptype), cfg.seed, &robust),
    )?;
    sink.json("report", &report)?;
    let write_ms = ms(t);

    sink.json(
        "summary",
        &Summary {
            plant: cfg.plant.label.clone(),
            ptype: cfg.ptype,
            seed: cfg.seed,
            samples: cfg.n_samples,
            stable_counts: ds.stable_counts,
            best_source: robust.source,
            files: ["region.csv", "centroid.json", "report.json"],
            timings: Timings {
                explore_ms,
                cluster_ms,
                report_ms,
                write_ms,
            },
        },
    )?;
    Ok((robust, report))
}

pub fn design(cmd: &DesignCmd, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let cfg = PipelineConfig {
        plant: load_plant(&cmd.plant.plant)?,
        ptype: cmd.explore.ptype,
        ranges: cmd.explore.ranges(),
        n_samples: cmd.explore.samples,
        seed,
        k: cmd.cluster.k,
        restarts: cmd.cluster.restarts,
        sim: cmd.sim.config(),
        out: out.unwrap_or_else(|| PathBuf::from("polepid-out")),
    };
    let (g, r) = run_pipeline(&cfg)?;
    println!(
        "{} {}: {} via {} ({} stable), Gm {} PM {} deg -> {}",
        cfg.plant.label,
        cfg.ptype,
        g.gains,
        g.source,
        g.n_stable,
        r.gm.map_or("inf".into(), |v| format!("{v:.4}")),
        r.phim_deg.map_or("-".into(), |v| format!("{v:.3}")),
        cfg.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct CountRow {
    plant: String,
    ptype: NonDominantPoleType,
    samples: usize,
    s1: usize,
    s2: usize,
    s3: usize,
    s4: usize,
    best_source: Option<KpSource>,
}

pub fn explore(cmd: &ExploreCmd, seed: u64, sink: &Sink) -> Result<()> {
    let plant = load_plant(&cmd.plant.plant)?;
    let ds = sample_region(
        &plant.label,
        &plant.model,
        cmd.explore.ptype,
        &cmd.explore.ranges(),
        cmd.explore.samples,
        seed,
    )?;
    let source = match cmd.source {
        Some(s) => s,
        None => best_expression(&ds).unwrap_or(KpSource::S1),
    };
    let records = export_region(&ds, source, cmd.stable_only);
    match sink.dir() {
        Some(_) => {
            sink.raw("region.csv", |w| Ok(write_region_csv(w, &records)?))?;
            let c = ds.stable_counts;
            let row = CountRow {
                plant: plant.label.clone(),
                ptype: cmd.explore.ptype,
                samples: ds.n_samples(),
                s1: c[0],
                s2: c[1],
                s3: c[2],
                s4: c[3],
                best_source: best_expression(&ds).ok(),
            };
            sink.json("counts", &row)?;
        }
        None => write_region_csv(std::io::stdout().lock(), &records)?,
    }
    Ok(())
}

pub fn centroid(cmd: &CentroidCmd, seed: u64, sink: &Sink) -> Result<()> {
    let plant = load_plant(&cmd.plant.plant)?;
    let f = fs::File::open(&cmd.input)
        .with_context(|| format!("cannot read {}", cmd.input.display()))?;
    let rows = read_region_csv(f)?;
    let points: Vec<[f64; 3]> = rows
        .iter()
        .filter(|r| r.stable)
        .map(|r| r.gains().as_array())
        .collect();
    let kcfg = KMeansConfig {
        k: cmd.cluster.k,
        restarts: cmd.cluster.restarts,
        seed,
        ..KMeansConfig::default()
    };
    let r = robust_gains_from_points(&plant.model, &points, cmd.source, &kcfg)?;
    sink.json(
        "centroid",
        &CentroidFile::new(&plant.label, cmd.ptype, seed, &r),
    )
}

pub fn metrics(cmd: &MetricsCmd, sink: &Sink) -> Result<()> {
    let plant = load_plant(&cmd.plant.plant)?;
    let r = performance_report(&plant.model, &cmd.gains, &cmd.sim.config())?;
    match sink.format {
        crate::args::Format::Json => sink.json("report", &r),
        crate::args::Format::Csv => sink.table("report", &[r]),
    }
}

#[derive(Debug, Serialize)]
struct TracePoint {
    t: f64,
    y: f64,
}

pub fn simulate_cmd(cmd: &SimulateCmd, sink: &Sink) -> Result<()> {
    let plant = load_plant(&cmd.plant.plant)?;
    let cfg = cmd.sim.config();
    let (horizon, dt) = cfg.resolve(&plant.model)?;
    let set = SensitivitySet::new(&plant.model, &cmd.gains, cfg.npade)?;
    polepid_core::metrics::require_stable(&set.t)?;
    let (sys, input) = match cmd.signal {
        Signal::Setpoint => (set.t.clone(), Input::Step),
        Signal::Disturbance => (set.sd.clone(), Input::Step),
        Signal::Control => (set.su_over_s(), Input::Impulse),
    };
    let sim = simulate(&realize(&sys)?, input, dt, horizon)?;
    let rows: Vec<TracePoint> = sim
        .values
        .iter()
        .enumerate()
        .map(|(k, &y)| TracePoint { t: sim.time(k), y })
        .collect();
    sink.table("response", &rows)
}

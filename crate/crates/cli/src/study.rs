use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use polepid_core::cluster::{robust_gains_with, KMeansConfig};
use polepid_core::explorer::{
    best_expression, export_region, sample_region, write_grouped_region_csv, DesignRanges,
};
use polepid_core::metrics::{pade_invariance, performance_report, PerformanceReport};
use polepid_core::plant::{DampingClass, DelayClass};
use polepid_core::robustness::{
    iso_performance_grid, max_allowable_perturbation, perturbation_sweep, write_grid_csv,
};
use polepid_core::rules::{
    fit_tuning_rule, predict_gains, search_basis, GainFit, GainKind, RuleSample, TuningRuleFit,
};
use polepid_core::stats::{kruskal_wallis, read_grouped_column, KruskalResult};
use polepid_core::{BenchmarkId, Error, KpSource, NonDominantPoleType, PidGains};
use serde::{Deserialize, Serialize};

use crate::args::{
    ClusterArgs, PerturbCmd, RulesAction, SimArgs, StatsAction, Study, StudyExplore,
};
use crate::common::{load_plant, load_plants, ptypes_or_all, resolve_gains, Plant};
use crate::output::Sink;

fn classes(plant: &Plant) -> (Option<DelayClass>, Option<DampingClass>) {
    match plant.label.parse::<BenchmarkId>() {
        Ok(id) => (Some(id.delay_class()), Some(id.damping_class())),
        Err(_) => (None, None),
    }
}

#[derive(Debug, Serialize)]
struct Table1Row {
    plant: String,
    delay_class: Option<DelayClass>,
    damping_class: Option<DampingClass>,
    ptype: NonDominantPoleType,
    samples: usize,
    s1: usize,
    s2: usize,
    s3: usize,
    s4: usize,
    max_count: usize,
    percent_volume: f64,
    best_source: Option<KpSource>,
}

fn table1(plants: &[Plant], ex: &StudyExplore, seed: u64, sink: &Sink) -> Result<()> {
    let mut rows = Vec::new();
    for p in plants {
        let (dc, zc) = classes(p);
        for ptype in ptypes_or_all(&ex.ptypes) {
            let ds = sample_region(
                &p.label,
                &p.model,
                ptype,
                &DesignRanges::default(),
                ex.samples,
                seed,
            )?;
            let c = ds.stable_counts;
            let max = *c.iter().max().expect("four sources");
            rows.push(Table1Row {
                plant: p.label.clone(),
                delay_class: dc,
                damping_class: zc,
                ptype,
                samples: ex.samples,
                s1: c[0],
                s2: c[1],
                s3: c[2],
                s4: c[3],
                max_count: max,
                percent_volume: if ex.samples == 0 {
                    0.0
                } else {
                    100.0 * max as f64 / ex.samples as f64
                },
                best_source: best_expression(&ds).ok(),
            });
        }
    }
    sink.table("table1", &rows)
}

/// One robust-centroid row; gains are absent when no stable region was
/// found or the centroid failed re-verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table2Row {
    pub plant: String,
    pub ptype: NonDominantPoleType,
    pub source: Option<KpSource>,
    pub n_stable: usize,
    pub median_distance: Option<f64>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    pub max_real_part: Option<f64>,
    pub verified: bool,
}

impl Table2Row {
    fn gains(&self) -> Option<PidGains> {
        Some(PidGains::new(self.kp?, self.ki?, self.kd?))
    }
}

fn table2_rows(
    plants: &[Plant],
    ptypes: &[NonDominantPoleType],
    samples: usize,
    cluster: &ClusterArgs,
    seed: u64,
) -> Result<Vec<Table2Row>> {
    let kcfg = KMeansConfig {
        k: cluster.k,
        restarts: cluster.restarts,
        seed,
        ..KMeansConfig::default()
    };
    let mut rows = Vec::new();
    for p in plants {
        for &ptype in ptypes {
            let ds = sample_region(
                &p.label,
                &p.model,
                ptype,
                &DesignRanges::default(),
                samples,
                seed,
            )?;
            let source = best_expression(&ds).ok();
            let n_stable = source.map_or(0, |s| ds.stable_counts[s.index()]);
            let mut row = Table2Row {
                plant: p.label.clone(),
                ptype,
                source,
                n_stable,
                median_distance: None,
                kp: None,
                ki: None,
                kd: None,
                max_real_part: None,
                verified: false,
            };
            match robust_gains_with(&ds, &kcfg) {
                Ok(r) => {
                    row.median_distance = Some(r.median_distance);
                    row.kp = Some(r.gains.kp);
                    row.ki = Some(r.gains.ki);
                    row.kd = Some(r.gains.kd);
                    row.max_real_part = Some(r.max_real_part);
                    row.verified = true;
                }
                Err(Error::NoStableRegion) => {}
                Err(Error::NonConvexRegion { max_real_part }) => {
                    row.max_real_part = Some(max_real_part)
                }
                Err(e) => return Err(e.into()),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct Table3Row {
    plant: String,
    kp: f64,
    ki: f64,
    kd: f64,
    j2_d: f64,
    jinf_d: f64,
    j2_u: f64,
    jinf_u: f64,
    j2_n: f64,
    jinf_n: f64,
    j2_e: f64,
    jinf_e: f64,
    gm: Option<f64>,
    phim_deg: Option<f64>,
    omega_gc: Option<f64>,
    horizon: f64,
    dt: f64,
    npade: usize,
}

impl Table3Row {
    fn new(plant: &str, g: &PidGains, r: &PerformanceReport) -> Self {
        Self {
            plant: plant.to_string(),
            kp: g.kp,
            ki: g.ki,
            kd: g.kd,
            j2_d: r.j2_d,
            jinf_d: r.jinf_d,
            j2_u: r.j2_u,
            jinf_u: r.jinf_u,
            j2_n: r.j2_n,
            jinf_n: r.jinf_n,
            j2_e: r.j2_e,
            jinf_e: r.jinf_e,
            gm: r.gm,
            phim_deg: r.phim_deg,
            omega_gc: r.omega_gc,
            horizon: r.horizon,
            dt: r.dt,
            npade: r.npade,
        }
    }
}

#[derive(Debug, Serialize)]
struct FitRow {
    gain: &'static str,
    terms: usize,
    rmse: f64,
    r2: f64,
    adj_r2: f64,
}

#[derive(Debug, Serialize)]
struct CoefRow {
    gain: &'static str,
    term: String,
    coefficient: f64,
    std_error: f64,
    ci95: f64,
}

fn fit_tables(fit: &TuningRuleFit, sink: &Sink) -> Result<()> {
    let parts: [(&'static str, &GainFit); 3] = [("Kp", &fit.kp), ("Ki", &fit.ki), ("Kd", &fit.kd)];
    let stats: Vec<FitRow> = parts
        .iter()
        .map(|(n, g)| FitRow {
            gain: n,
            terms: g.terms.len(),
            rmse: g.rmse,
            r2: g.r2,
            adj_r2: g.adj_r2,
        })
        .collect();
    let coefs: Vec<CoefRow> = parts
        .iter()
        .flat_map(|(n, g)| {
            (0..g.terms.len()).map(move |k| CoefRow {
                gain: n,
                term: g.terms[k].to_string(),
                coefficient: g.coefficients[k],
                std_error: g.std_errors[k],
                ci95: g.ci95[k],
            })
        })
        .collect();
    sink.table("table4", &stats)?;
    sink.table("coefficients", &coefs)?;
    sink.json("tuning_rule", fit)
}

fn read_table2(path: &Path) -> Result<Vec<Table2Row>> {
    let f = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rd = csv::Reader::from_reader(f);
    let rows = rd
        .deserialize()
        .collect::<std::result::Result<Vec<Table2Row>, _>>()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(rows)
}

fn rule_samples(rows: &[Table2Row], ptype: NonDominantPoleType) -> Result<Vec<RuleSample>> {
    rows.iter()
        .filter(|r| r.ptype == ptype && r.verified)
        .map(|r| {
            let p = load_plant(&r.plant)?;
            let g = r
                .gains()
                .ok_or_else(|| Error::Parse(format!("row {} lacks gains", r.plant)))?;
            Ok(RuleSample::new(&p.model, g))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct InvarianceRow {
    order: usize,
    stable: bool,
    max_real_part: f64,
    dominant_re: Option<f64>,
    dominant_im: Option<f64>,
    damping: Option<f64>,
    setpoint_deviation: Option<f64>,
    disturbance_deviation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct KruskalOut {
    column: String,
    groups: Vec<String>,
    group_sizes: Vec<usize>,
    n: usize,
    h: f64,
    df: usize,
    p_value: String,
    p_upper_bound: f64,
}

impl KruskalOut {
    fn new(column: &str, groups: &[(String, Vec<f64>)], r: &KruskalResult) -> Self {
        Self {
            column: column.to_string(),
            groups: groups.iter().map(|g| g.0.clone()).collect(),
            group_sizes: groups.iter().map(|g| g.1.len()).collect(),
            n: r.n,
            h: r.h,
            df: r.df,
            p_value: r.p_value.to_string(),
            p_upper_bound: r.p_value.upper_bound(),
        }
    }
}

fn kruskal_groups(groups: &[(String, Vec<f64>)]) -> Result<KruskalResult> {
    let nonempty: Vec<&Vec<f64>> = groups
        .iter()
        .map(|g| &g.1)
        .filter(|v| !v.is_empty())
        .collect();
    Ok(kruskal_wallis(&nonempty)?)
}

pub fn run_study(which: &Study, seed: u64, sink: &Sink) -> Result<()> {
    match which {
        Study::Table1 { plants, explore } => {
            table1(&load_plants(&plants.plants)?, explore, seed, sink)
        }
        Study::Table2 {
            plants,
            explore,
            cluster,
        } => {
            let rows = table2_rows(
                &load_plants(&plants.plants)?,
                &ptypes_or_all(&explore.ptypes),
                explore.samples,
                cluster,
                seed,
            )?;
            sink.table("table2", &rows)
        }
        Study::Table3 {
            plant,
            plants,
            gains,
            sim,
        } => {
            let list = match plant {
                Some(p) => vec![load_plant(p)?],
                None => {
                    if gains.gains.is_some() {
                        bail!(Error::InvalidInput("--gains needs a single --plant".into()));
                    }
                    load_plants(&plants.plants)?
                }
            };
            let rows = list
                .iter()
                .map(|p| {
                    let g = resolve_gains(p, gains, seed)?;
                    let r = performance_report(&p.model, &g, &sim.config())?;
                    Ok(Table3Row::new(&p.label, &g, &r))
                })
                .collect::<Result<Vec<_>>>()?;
            sink.table("table3", &rows)
        }
        Study::Table4 {
            input,
            ptype,
            samples,
            regressand,
        } => {
            let rows = match input {
                Some(path) => read_table2(path)?,
                None => {
                    let cl = ClusterArgs { k: 1, restarts: 10 };
                    let rows = table2_rows(&load_plants(&[])?, &[*ptype], *samples, &cl, seed)?;
                    sink.table("table2", &rows)?;
                    rows
                }
            };
            let fit = fit_tuning_rule(&rule_samples(&rows, *ptype)?, *regressand)?;
            fit_tables(&fit, sink)
        }
        Study::Invariance {
            plant,
            gains,
            orders,
            sim,
        } => {
            let p = load_plant(&plant.plant)?;
            let g = resolve_gains(&p, gains, seed)?;
            invariance(&p, &g, orders, sim, sink)
        }
        Study::Perturb(cmd) => perturb(cmd, seed, sink),
        Study::Kruskal {
            plants,
            explore,
            column,
        } => {
            let mut grouped = Vec::new();
            for p in load_plants(&plants.plants)? {
                for ptype in ptypes_or_all(&explore.ptypes) {
                    let ds = sample_region(
                        &p.label,
                        &p.model,
                        ptype,
                        &DesignRanges::default(),
                        explore.samples,
                        seed,
                    )?;
                    let recs = match best_expression(&ds) {
                        Ok(s) => export_region(&ds, s, true),
                        Err(_) => Vec::new(),
                    };
                    grouped.push((format!("{}/{}", p.label, ptype), recs));
                }
            }
            sink.raw("kruskal_samples.csv", |w| {
                Ok(write_grouped_region_csv(w, &grouped)?)
            })?;
            let mut buf = Vec::new();
            write_grouped_region_csv(&mut buf, &grouped)?;
            let groups = read_grouped_column(&buf[..], column)?;
            let r = kruskal_groups(&groups)?;
            sink.json("kruskal", &KruskalOut::new(column, &groups, &r))
        }
    }
}

fn invariance(p: &Plant, g: &PidGains, orders: &[usize], sim: &SimArgs, sink: &Sink) -> Result<()> {
    let study = pade_invariance(&p.model, g, orders, &sim.config())?;
    let rows: Vec<InvarianceRow> = study
        .summary()
        .into_iter()
        .map(|s| InvarianceRow {
            order: s.order,
            stable: s.stable,
            max_real_part: s.max_real_part,
            dominant_re: s.dominant_re,
            dominant_im: s.dominant_im,
            damping: s.damping,
            setpoint_deviation: s.setpoint_deviation,
            disturbance_deviation: s.disturbance_deviation,
        })
        .collect();
    sink.table("invariance", &rows)?;
    sink.raw("responses.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for o in &study.orders {
            header.push(format!("setpoint_{}", o.order));
            header.push(format!("disturbance_{}", o.order));
        }
        wr.write_record(&header)?;
        let len = study
            .orders
            .iter()
            .map(|o| o.setpoint.len())
            .max()
            .unwrap_or(0);
        for k in 0..len {
            let mut rec = vec![(k as f64 * study.dt).to_string()];
            for o in &study.orders {
                for v in [&o.setpoint, &o.disturbance] {
                    rec.push(v.get(k).map(|x| x.to_string()).unwrap_or_default());
                }
            }
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    })
}

#[derive(Debug, Serialize)]
struct PerturbRow {
    index: u64,
    #[serde(rename = "L")]
    delay: f64,
    #[serde(rename = "T")]
    lag: f64,
    zeta_ol: f64,
    stable: bool,
    max_real_part: f64,
    j2_d: Option<f64>,
    jinf_d: Option<f64>,
    j2_u: Option<f64>,
    jinf_u: Option<f64>,
    j2_n: Option<f64>,
    jinf_n: Option<f64>,
    j2_e: Option<f64>,
    jinf_e: Option<f64>,
    gm: Option<f64>,
    phim_deg: Option<f64>,
    omega_gc: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct PerturbSummary {
    plant: String,
    kp: f64,
    ki: f64,
    kd: f64,
    pct: f64,
    count: usize,
    seed: u64,
    unstable: usize,
    metric_errors: usize,
    max_allowable: Option<f64>,
    max_step: Option<f64>,
}

pub fn perturb(cmd: &PerturbCmd, seed: u64, sink: &Sink) -> Result<()> {
    let p = load_plant(&cmd.plant.plant)?;
    let g = resolve_gains(&p, &cmd.gains, seed)?;
    let cfg = cmd.sim.config();
    let study = perturbation_sweep(&p.model, &g, cmd.pct, cmd.count, seed, &cfg)?;
    let rows: Vec<PerturbRow> = study
        .rows
        .iter()
        .map(|r| {
            let v = r.report.map(|x| x.values());
            let at = |k: usize| v.and_then(|v| v[k]);
            PerturbRow {
                index: r.index,
                delay: r.model.delay,
                lag: r.model.lag,
                zeta_ol: r.model.zeta,
                stable: r.stable,
                max_real_part: r.max_real_part,
                j2_d: at(0),
                jinf_d: at(1),
                j2_u: at(2),
                jinf_u: at(3),
                j2_n: at(4),
                jinf_n: at(5),
                j2_e: at(6),
                jinf_e: at(7),
                gm: at(8),
                phim_deg: at(9),
                omega_gc: at(10),
                error: r.error.clone(),
            }
        })
        .collect();
    sink.table("perturb", &rows)?;
    let max_allowable = match cmd.max_step {
        Some(step) => Some(max_allowable_perturbation(
            &p.model, &g, step, cmd.count, seed,
        )?),
        None => None,
    };
    if let Some(n) = cmd.grid {
        let grid = iso_performance_grid(&p.model, &g, cmd.pct, n, cmd.pair, &cfg)?;
        sink.raw("grid.csv", |w| Ok(write_grid_csv(&grid, w)?))?;
    }
    sink.json(
        "perturb_summary",
        &PerturbSummary {
            plant: p.label,
            kp: g.kp,
            ki: g.ki,
            kd: g.kd,
            pct: cmd.pct,
            count: cmd.count,
            seed,
            unstable: study.n_unstable(),
            metric_errors: study.rows.iter().filter(|r| r.error.is_some()).count(),
            max_allowable,
            max_step: cmd.max_step,
        },
    )
}

#[derive(Debug, Serialize)]
struct SearchRow {
    gain: &'static str,
    terms: String,
    rmse: f64,
    r2: f64,
    adj_r2: f64,
}

pub fn rules(action: &RulesAction, sink: &Sink) -> Result<()> {
    match action {
        RulesAction::Fit {
            input,
            ptype,
            regressand,
            search,
        } => {
            let samples = rule_samples(&read_table2(input)?, *ptype)?;
            let fit = fit_tuning_rule(&samples, *regressand)?;
            fit_tables(&fit, sink)?;
            if *search {
                let mut rows = Vec::new();
                for (name, kind) in [
                    ("Kp", GainKind::Kp),
                    ("Ki", GainKind::Ki),
                    ("Kd", GainKind::Kd),
                ] {
                    for f in search_basis(&samples, kind, *regressand, 2, 2)? {
                        rows.push(SearchRow {
                            gain: name,
                            terms: f
                                .terms
                                .iter()
                                .map(|t| t.to_string())
                                .collect::<Vec<_>>()
                                .join(" "),
                            rmse: f.rmse,
                            r2: f.r2,
                            adj_r2: f.adj_r2,
                        });
                    }
                }
                sink.table("basis_search", &rows)?;
            }
            Ok(())
        }
        RulesAction::Predict {
            fit,
            plant,
            l_over_t,
            zeta_ol,
            gain,
        } => {
            let text = fs::read_to_string(fit)
                .with_context(|| format!("cannot read {}", fit.display()))?;
            let fit: TuningRuleFit = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", "fit file")))?;
            let (x, z, k) = match plant {
                Some(p) => {
                    let m = load_plant(p)?.model;
                    (m.l_over_t(), m.zeta, m.gain)
                }
                None => match (l_over_t, zeta_ol, gain) {
                    (Some(x), Some(z), Some(k)) => (*x, *z, *k),
                    _ => bail!(Error::InvalidInput(
                        "give --plant or all of --l-over-t, --zeta-ol, --gain".into()
                    )),
                },
            };
            let g = predict_gains(&fit, x, z, k)?;
            sink.json("predicted_gains", &g)
        }
    }
}

pub fn stats(action: &StatsAction, sink: &Sink) -> Result<()> {
    match action {
        StatsAction::Kruskal { input, column } => {
            let f = fs::File::open(input)
                .with_context(|| format!("cannot read {}", input.display()))?;
            let groups = read_grouped_column(f, column)?;
            let r = kruskal_groups(&groups)?;
            sink.json("kruskal", &KruskalOut::new(column, &groups, &r))
        }
    }
}

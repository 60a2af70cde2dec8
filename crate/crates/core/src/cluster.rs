//! k-means over stabilizing gain triples and the robust centroid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::{best_expression, RegionDataset};
use crate::placement::{closedloop_poles, KpSource, PidGains, DESIGN_PADE_ORDER, STABILITY_MARGIN};
use crate::plant::SoptdModel;
use crate::polytf::max_real_part;
use crate::rng::{CounterRng, Domain};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 1,
            restarts: 10,
            tol: 1e-10,
            max_iter: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub centroids: Vec<Point>,
    pub assignments: Vec<usize>,
    pub within_ss: f64,
    pub median_distances: Vec<f64>,
    /// Final within-cluster sum of squares of every restart, by restart index.
    pub restart_within_ss: Vec<f64>,
}

/// One Lloyd run from fixed initial centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub centroids: Vec<Point>,
    pub assignments: Vec<usize>,
    pub within_ss: f64,
    /// Sum of squares after each assignment step.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Lloyd iteration: assign to the nearest centroid (ties to the lowest index),
/// move centroids to their cluster means, stop when no centroid moves more
/// than `tol`. An empty cluster keeps its previous centroid.
pub fn lloyd(points: &[Point], init: Vec<Point>, tol: f64, max_iter: usize) -> LloydRun {
    let k = init.len();
    let mut centroids = init;
    let mut assignments = vec![0; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut ss = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centroids);
            *a = j;
            ss += d;
        }
        history.push(ss);
        if iterations == max_iter {
            break;
        }
        iterations += 1;
        let mut sums = vec![[0.0; 3]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for i in 0..3 {
                sums[a][i] += p[i];
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let next = sums[j].map(|s| s / counts[j] as f64);
            shift = shift.max(dist2(&next, &centroids[j]).sqrt());
            centroids[j] = next;
        }
        if shift < tol {
            // final assignment against the converged centroids
            let mut ss = 0.0;
            for (a, p) in assignments.iter_mut().zip(points) {
                let (j, d) = nearest(p, &centroids);
                *a = j;
                ss += d;
            }
            history.push(ss);
            break;
        }
    }
    LloydRun {
        within_ss: *history.last().expect("at least one assignment step"),
        centroids,
        assignments,
        history,
        iterations,
    }
}

/// Best of `restarts` Lloyd runs, each seeded with `k` distinct points drawn
/// from stream `(seed, restart)`. Ties in the final sum of squares go to the
/// lowest restart index. With `k = 1` every restart returns the mean.
pub fn kmeans(points: &[Point], cfg: &KMeansConfig) -> Result<ClusterResult> {
    if points.is_empty() {
        return Err(Error::InvalidInput("k-means on an empty point set".into()));
    }
    if cfg.k == 0 || cfg.k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k = {} must lie in 1..={}",
            cfg.k,
            points.len()
        )));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidInput(
            "at least one restart is required".into(),
        ));
    }
    let runs: Vec<LloydRun> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::new(cfg.seed, Domain::Cluster, r as u64);
            let mut picked: Vec<usize> = Vec::with_capacity(cfg.k);
            while picked.len() < cfg.k {
                let i = rng.below(points.len() as u64) as usize;
                if !picked.contains(&i) {
                    picked.push(i);
                }
            }
            lloyd(
                points,
                picked.iter().map(|&i| points[i]).collect(),
                cfg.tol,
                cfg.max_iter,
            )
        })
        .collect();
    let restart_within_ss: Vec<f64> = runs.iter().map(|r| r.within_ss).collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.within_ss.total_cmp(&b.1.within_ss).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r)
        .expect("restarts >= 1");
    let median_distances = (0..cfg.k)
        .map(|j| {
            let members: Vec<Point> = points
                .iter()
                .zip(&best.assignments)
                .filter(|(_, &a)| a == j)
                .map(|(p, _)| *p)
                .collect();
            if members.is_empty() {
                f64::NAN
            } else {
                median_distance(&members, &best.centroids[j])
            }
        })
        .collect();
    Ok(ClusterResult {
        centroids: best.centroids,
        assignments: best.assignments,
        within_ss: best.within_ss,
        median_distances,
        restart_within_ss,
    })
}

/// Median Euclidean distance to `centroid`; an even count averages the two
/// middle values.
pub fn median_distance(points: &[Point], centroid: &Point) -> f64 {
    let mut d: Vec<f64> = points.iter().map(|p| dist2(p, centroid).sqrt()).collect();
    if d.is_empty() {
        return f64::NAN;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustGains {
    pub gains: PidGains,
    pub median_distance: f64,
    pub source: KpSource,
    /// Stabilizing points in the chosen cluster (all of them for `k = 1`).
    pub n_stable: usize,
    /// Largest closed-loop real part of the centroid at Pade order 3.
    pub max_real_part: f64,
}

/// k = 1 centroid of the stabilizing gains of the best Kp expression, checked
/// to stabilize the nominal plant. Restarts are seeded from the dataset seed.
pub fn robust_gains(dataset: &RegionDataset) -> Result<RobustGains> {
    let cfg = KMeansConfig {
        seed: dataset.seed,
        ..KMeansConfig::default()
    };
    robust_gains_with(dataset, &cfg)
}

/// As [`robust_gains`] with explicit clustering settings. For `k > 1` the
/// centroid of the most populated cluster is taken (ties to the lowest index).
pub fn robust_gains_with(dataset: &RegionDataset, cfg: &KMeansConfig) -> Result<RobustGains> {
    let source = best_expression(dataset)?;
    let points: Vec<Point> = dataset
        .stable_gains(source)
        .iter()
        .map(|g| g.as_array())
        .collect();
    robust_gains_from_points(&dataset.model, &points, source, cfg)
}

/// Centroid of an explicit set of stabilizing gain triples, verified against `model`.
pub fn robust_gains_from_points(
    model: &SoptdModel,
    points: &[Point],
    source: KpSource,
    cfg: &KMeansConfig,
) -> Result<RobustGains> {
    if points.is_empty() {
        return Err(Error::NoStableRegion);
    }
    let res = kmeans(points, cfg)?;
    let mut sizes = vec![0usize; cfg.k];
    for &a in &res.assignments {
        sizes[a] += 1;
    }
    let j = (0..cfg.k).fold(0, |b, j| if sizes[j] > sizes[b] { j } else { b });
    let c = res.centroids[j];
    let gains = PidGains::new(c[0], c[1], c[2]);
    let poles = closedloop_poles(model, &gains, DESIGN_PADE_ORDER)?;
    let mrp = max_real_part(&poles).expect("nonempty");
    if !(mrp < STABILITY_MARGIN) {
        return Err(Error::NonConvexRegion { max_real_part: mrp });
    }
    Ok(RobustGains {
        gains,
        median_distance: res.median_distances[j],
        source,
        n_stable: sizes[j],
        max_real_part: mrp,
    })
}

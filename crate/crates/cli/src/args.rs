use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polepid_core::explorer::{DesignRanges, Interval};
use polepid_core::metrics::SimulationConfig;
use polepid_core::robustness::ParamPair;
use polepid_core::rules::Regressand;
use polepid_core::{KpSource, NonDominantPoleType, PidGains};

#[derive(Debug, Parser)]
#[command(
    name = "polepid",
    version,
    about = "Robust PID design for SOPTD plants by dominant pole placement"
)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output directory. Single-table commands print to stdout without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Benchmark plant registry.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Full pipeline: explore, cluster, verify and report.
    Design(DesignCmd),
    /// Sample the design space and export the stability region.
    Explore(ExploreCmd),
    /// Robust gains from an exported region CSV.
    Centroid(CentroidCmd),
    /// Eleven-metric performance report for fixed gains.
    Metrics(MetricsCmd),
    /// Closed-loop time response.
    Simulate(SimulateCmd),
    /// Reproduce one of the study tables.
    Study {
        #[command(subcommand)]
        which: Study,
    },
    /// Monte Carlo perturbation of the plant around fixed gains.
    Perturb(PerturbCmd),
    /// Polynomial tuning rules.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Rank tests on exported samples.
    Stats {
        #[command(subcommand)]
        action: StatsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchAction {
    /// The nine benchmark plants with their class labels.
    List,
}

#[derive(Debug, Clone, Args)]
pub struct PlantArg {
    /// Benchmark id (G1..G9) or path to a JSON model `{"K","L","T","zeta_ol"}`.
    #[arg(long)]
    pub plant: String,
}

#[derive(Debug, Clone, Args)]
pub struct ExploreArgs {
    /// Non-dominant pole type.
    #[arg(long, default_value = "all-real")]
    pub ptype: NonDominantPoleType,
    /// Monte Carlo design samples.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Range of m as `lo,hi`.
    #[arg(long, default_value = "1,10", value_parser = parse_interval)]
    pub m_range: Interval,
    /// Range of the closed-loop damping as `lo,hi`.
    #[arg(long, default_value = "1,5", value_parser = parse_interval)]
    pub zeta_range: Interval,
    /// Range of the closed-loop frequency as `lo,hi`.
    #[arg(long, default_value = "1,10", value_parser = parse_interval)]
    pub omega_range: Interval,
}

impl ExploreArgs {
    pub fn ranges(&self) -> DesignRanges {
        DesignRanges {
            m: self.m_range,
            zeta_cl: self.zeta_range,
            omega_cl: self.omega_range,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Simulation horizon; defaults to 50 (L + T).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Integration step; defaults to min(L, T) / 200.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Pade order of the delay in every closed-loop computation.
    #[arg(long, default_value_t = 3)]
    pub npade: usize,
}

impl SimArgs {
    pub fn config(&self) -> SimulationConfig {
        SimulationConfig {
            horizon: self.horizon,
            dt: self.dt,
            npade: self.npade,
        }
    }
}

#[derive(Debug, Args)]
pub struct DesignCmd {
    #[command(flatten)]
    pub plant: PlantArg,
    #[command(flatten)]
    pub explore: ExploreArgs,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct ExploreCmd {
    #[command(flatten)]
    pub plant: PlantArg,
    #[command(flatten)]
    pub explore: ExploreArgs,
    /// Kp expression to export; defaults to the one with most stable samples.
    #[arg(long)]
    pub source: Option<KpSource>,
    /// Export only stabilizing samples.
    #[arg(long)]
    pub stable_only: bool,
}

#[derive(Debug, Args)]
pub struct CentroidCmd {
    #[command(flatten)]
    pub plant: PlantArg,
    /// Region CSV written by `explore`; only rows flagged stable are used.
    #[arg(long)]
    pub input: PathBuf,
    /// Kp expression recorded in the output.
    #[arg(long, default_value = "S1")]
    pub source: KpSource,
    /// Pole type recorded in the output.
    #[arg(long)]
    pub ptype: Option<NonDominantPoleType>,
    #[command(flatten)]
    pub cluster: ClusterArgs,
}

#[derive(Debug, Args)]
pub struct MetricsCmd {
    #[command(flatten)]
    pub plant: PlantArg,
    /// Gains as `kp,ki,kd`.
    #[arg(long, allow_hyphen_values = true)]
    pub gains: PidGains,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Signal {
    /// Output after a unit set-point step.
    Setpoint,
    /// Output after a unit load disturbance step.
    Disturbance,
    /// Control signal after a unit set-point step, impulse excluded.
    Control,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub plant: PlantArg,
    #[arg(long, allow_hyphen_values = true)]
    pub gains: PidGains,
    #[arg(long, value_enum, default_value_t = Signal::Setpoint)]
    pub signal: Signal,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlantsArg {
    /// Comma-separated benchmark ids; all nine by default.
    #[arg(long, value_delimiter = ',')]
    pub plants: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct StudyExplore {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Pole types; all three by default.
    #[arg(long, value_delimiter = ',')]
    pub ptypes: Vec<NonDominantPoleType>,
}

#[derive(Debug, Clone, Args)]
pub struct FixedGains {
    /// Gains as `kp,ki,kd`; designed from `--samples` exploration when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub gains: Option<PidGains>,
    #[arg(long, default_value = "all-real")]
    pub ptype: NonDominantPoleType,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Debug, Subcommand)]
pub enum Study {
    /// Stable sample counts per plant, pole type and Kp expression.
    Table1 {
        #[command(flatten)]
        plants: PlantsArg,
        #[command(flatten)]
        explore: StudyExplore,
    },
    /// Robust centroids and median distances.
    Table2 {
        #[command(flatten)]
        plants: PlantsArg,
        #[command(flatten)]
        explore: StudyExplore,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Performance reports of robust gains.
    Table3 {
        /// Single plant; required with `--gains`.
        #[arg(long)]
        plant: Option<String>,
        #[command(flatten)]
        plants: PlantsArg,
        #[command(flatten)]
        gains: FixedGains,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Tuning-rule fit over the benchmark set.
    Table4 {
        /// Centroid CSV written by `study table2`; the benchmarks are explored when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "all-real")]
        ptype: NonDominantPoleType,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value = "raw")]
        regressand: Regressand,
    },
    /// Step responses across Pade orders.
    Invariance {
        #[command(flatten)]
        plant: PlantArg,
        #[command(flatten)]
        gains: FixedGains,
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,9")]
        orders: Vec<usize>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Perturbation sweep, allowable perturbation and grids.
    Perturb(PerturbCmd),
    /// Kruskal-Wallis test of Kp samples across the 27 plant and pole-type groups.
    Kruskal {
        #[command(flatten)]
        plants: PlantsArg,
        #[command(flatten)]
        explore: StudyExplore,
        /// Sample column to test.
        #[arg(long, default_value = "kp")]
        column: String,
    },
}

#[derive(Debug, Args)]
pub struct PerturbCmd {
    #[command(flatten)]
    pub plant: PlantArg,
    #[command(flatten)]
    pub gains: FixedGains,
    /// Relative perturbation of L, T and zeta_ol.
    #[arg(long, default_value_t = 0.4)]
    pub pct: f64,
    /// Number of perturbed plants.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Also search the largest allowable perturbation with this step.
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Also write an n x n iso-performance grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Parameter pair for the grid.
    #[arg(long, default_value = "L,T")]
    pub pair: ParamPair,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Subcommand)]
pub enum RulesAction {
    /// Fit the tuning rules to a centroid CSV written by `study table2`.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Pole type rows to use from the input.
        #[arg(long, default_value = "all-real")]
        ptype: NonDominantPoleType,
        #[arg(long, default_value = "raw")]
        regressand: Regressand,
        /// Also rank every basis subset up to second order by adjusted R².
        #[arg(long)]
        search: bool,
    },
    /// Evaluate a fitted rule.
    Predict {
        /// Fit JSON written by `rules fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Plant to evaluate at; alternatively give the three parameters.
        #[arg(long, conflicts_with_all = ["l_over_t", "zeta_ol", "gain"])]
        plant: Option<String>,
        #[arg(long)]
        l_over_t: Option<f64>,
        #[arg(long)]
        zeta_ol: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        gain: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsAction {
    /// Kruskal-Wallis on a CSV with a `group` column.
    Kruskal {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "kp")]
        column: String,
    },
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Interval::new(lo, hi).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn intervals() {
        let i = parse_interval("1, 10").unwrap();
        assert_eq!((i.lo, i.hi), (1.0, 10.0));
        assert!(parse_interval("3,2").is_err());
        assert!(parse_interval("3").is_err());
    }

    #[test]
    fn global_flags_after_subcommand() {
        let c = Cli::try_parse_from([
            "polepid", "bench", "list", "--seed", "7", "--format", "json",
        ])
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.format, Format::Json);
    }
}

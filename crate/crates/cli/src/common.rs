use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use polepid_core::cluster::{robust_gains_with, KMeansConfig, RobustGains};
use polepid_core::explorer::{sample_region, DesignRanges};
use polepid_core::plant::benchmark;
use polepid_core::{BenchmarkId, Error, NonDominantPoleType, PidGains, SoptdModel};

use crate::args::FixedGains;

/// Exit status for a failure, from the first library error in the chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<Error>());
    match core {
        Some(Error::NoStableRegion | Error::NonConvexRegion { .. }) => 3,
        Some(
            Error::InvalidInput(_)
            | Error::OrderOutOfRange { .. }
            | Error::NotFound { .. }
            | Error::InvalidModel(_)
            | Error::InvalidGains(_)
            | Error::Parse(_),
        ) => 2,
        Some(_) => 4,
        None => 2,
    }
}

#[derive(Debug, Clone)]
pub struct Plant {
    pub label: String,
    pub model: SoptdModel,
}

/// `G1`..`G9`, a bare index, or a JSON model file.
pub fn load_plant(sel: &str) -> Result<Plant> {
    match sel.parse::<BenchmarkId>() {
        Ok(id) => Ok(Plant {
            label: format!("G{}", id.index()),
            model: benchmark(id),
        }),
        Err(e) => {
            let path = Path::new(sel);
            if !path.is_file() {
                return Err(e.into());
            }
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {sel}"))?;
            let model: SoptdModel = serde_json::from_str(&text)
                .map_err(|err| Error::InvalidModel(format!("{sel}: {err}")))?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| sel.to_string());
            Ok(Plant { label, model })
        }
    }
}

/// The listed plants, or all nine benchmarks.
pub fn load_plants(sel: &[String]) -> Result<Vec<Plant>> {
    if sel.is_empty() {
        return BenchmarkId::ALL
            .iter()
            .map(|id| load_plant(&id.index().to_string()))
            .collect();
    }
    sel.iter().map(|s| load_plant(s)).collect()
}

pub fn ptypes_or_all(p: &[NonDominantPoleType]) -> Vec<NonDominantPoleType> {
    if p.is_empty() {
        NonDominantPoleType::ALL.to_vec()
    } else {
        p.to_vec()
    }
}

/// Explores and clusters one plant with default design ranges.
pub fn design(
    plant: &Plant,
    ptype: NonDominantPoleType,
    ranges: &DesignRanges,
    samples: usize,
    seed: u64,
    k: usize,
    restarts: usize,
) -> Result<RobustGains> {
    let ds = sample_region(&plant.label, &plant.model, ptype, ranges, samples, seed)?;
    let cfg = KMeansConfig {
        k,
        restarts,
        seed,
        ..KMeansConfig::default()
    };
    Ok(robust_gains_with(&ds, &cfg)?)
}

/// Explicit gains, or the robust design from a fresh exploration.
pub fn resolve_gains(plant: &Plant, g: &FixedGains, seed: u64) -> Result<PidGains> {
    match g.gains {
        Some(x) => Ok(x),
        None => Ok(design(
            plant,
            g.ptype,
            &DesignRanges::default(),
            g.samples,
            seed,
            1,
            10,
        )?
        .gains),
    }
}

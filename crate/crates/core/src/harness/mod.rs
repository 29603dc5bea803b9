//! Batch experiments over levels and agent variants, and the metrics
//! computed from them.

mod compare;
pub mod io;
mod metrics;
pub mod plot;
pub mod stats;
pub mod sweep;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compare::{compare, pearson, rmse, ComparisonReport};
pub use metrics::{cumulative_curve, curve_area, run_area, LevelMetrics};

use crate::agent::{run_episode, EpisodeLog, SsupConfig, Variant};
use crate::error::HarnessError;
use crate::level::LevelSpec;

pub const DEFAULT_RUNS: usize = 250;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub variants: Vec<Variant>,
    pub runs: usize,
    pub base_seed: u64,
    pub agent: SsupConfig,
    /// Where [`write_outputs`] puts its files; unused by [`run_experiment`].
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            variants: Variant::ALL.to_vec(),
            runs: DEFAULT_RUNS,
            base_seed: 0,
            agent: SsupConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be >= 1".into()));
        }
        if self.variants.is_empty() {
            return Err(HarnessError::Config("no variants selected".into()));
        }
        self.agent.validate().map_err(|e| HarnessError::Config(e.to_string()))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed of one episode. Depends only on its coordinates, so adding levels
/// or variants never changes the runs already in an experiment.
pub fn episode_seed(base_seed: u64, level: &str, variant: Variant, run: usize) -> u64 {
    let h = splitmix64(base_seed ^ fnv1a(level.as_bytes()));
    let h = splitmix64(h ^ fnv1a(variant.as_str().as_bytes()));
    splitmix64(h ^ run as u64)
}

/// Every episode of one (level, variant) pair plus its metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub metrics: LevelMetrics,
    pub logs: Vec<EpisodeLog>,
}

/// Runs `cfg.runs` episodes for every level and variant. Output order is
/// level-major, then variant, whatever order the workers finish in.
pub fn run_experiment(levels: &[LevelSpec], cfg: &ExperimentConfig) -> Result<Vec<CellResult>, HarnessError> {
    cfg.validate()?;
    let jobs: Vec<(usize, Variant, usize)> = levels
        .iter()
        .enumerate()
        .flat_map(|(l, _)| cfg.variants.iter().flat_map(move |&v| (0..cfg.runs).map(move |r| (l, v, r))))
        .collect();
    let logs: Vec<EpisodeLog> = jobs
        .par_iter()
        .map(|&(l, variant, run)| {
            let level = &levels[l];
            let seed = episode_seed(cfg.base_seed, &level.name, variant, run);
            run_episode(level, &cfg.agent, variant, seed).map_err(|source| HarnessError::Episode {
                level: level.name.clone(),
                variant: variant.to_string(),
                run,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(logs
        .chunks(cfg.runs)
        .map(|chunk| CellResult { metrics: LevelMetrics::from_logs(chunk, cfg.agent.max_attempts), logs: chunk.to_vec() })
        .collect())
}

/// Loads every `*.json` level in `dir`, sorted by file name. Fails on the
/// first bad document so no episode starts against a partial level set.
pub fn load_level_dir(dir: &Path) -> Result<Vec<LevelSpec>, HarnessError> {
    let io_err = |source| HarnessError::Io { path: dir.display().to_string(), source };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json") && p.is_file());
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!("no level documents in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| LevelSpec::load_file(p).map_err(|source| HarnessError::Level { path: p.display().to_string(), source }))
        .collect()
}

/// Writes the metrics CSV, one episode JSONL per cell and one curve plot
/// per level into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, cells: &[CellResult]) -> Result<(), HarnessError> {
    let episodes = dir.join("episodes");
    let plots = dir.join("plots");
    for d in [dir, episodes.as_path(), plots.as_path()] {
        std::fs::create_dir_all(d).map_err(|source| HarnessError::Io { path: d.display().to_string(), source })?;
    }
    let metrics: Vec<LevelMetrics> = cells.iter().map(|c| c.metrics.clone()).collect();
    io::write_metrics_csv(&dir.join("metrics.csv"), &metrics)?;
    for cell in cells {
        let name = format!("{}.{}.jsonl", cell.metrics.level, cell.metrics.variant);
        io::write_episodes(&episodes.join(name), cfg, &cell.logs)?;
    }
    let mut level_names: Vec<&str> = metrics.iter().map(|m| m.level.as_str()).collect();
    level_names.dedup();
    for level in level_names {
        let rows: Vec<&LevelMetrics> = metrics.iter().filter(|m| m.level == level).collect();
        let path = plots.join(format!("{level}.svg"));
        std::fs::write(&path, plot::cumulative_svg(level, &rows))
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    }
    Ok(())
}

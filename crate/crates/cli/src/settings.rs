//! Layered settings: built-in defaults, then `--config`, then flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use planset::genset::GenConfig;
use planset::{DistanceMetric, WeightDistribution};

use crate::Usage;

#[derive(Debug, Clone, Default, Args)]
pub struct Tuning {
    /// TOML file with generation and search settings.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long, value_name = "SEC")]
    pub timeout: Option<f64>,
    /// Number of plans to return.
    #[arg(long)]
    pub k: Option<usize>,
    /// Minimum pairwise distance.
    #[arg(long)]
    pub d: Option<f64>,
    /// Sampling weights in the first hybrid phase.
    #[arg(long)]
    pub k0: Option<usize>,
    /// Balance factor for the one-sided action distances.
    #[arg(long)]
    pub gamma: Option<u32>,
    /// action | clink | state-pad | state-hold
    #[arg(long)]
    pub metric: Option<DistanceMetric>,
    /// uniform | tri:<mode>
    #[arg(long)]
    pub dist: Option<WeightDistribution>,
}

fn read_config(path: &Path) -> anyhow::Result<(GenConfig, toml::Table)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let cfg: GenConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((cfg, table))
}

impl Tuning {
    /// Merged settings. A flag given on the command line wins over the
    /// same key in the config file.
    pub fn resolve(&self) -> anyhow::Result<GenConfig> {
        let (mut cfg, table) = match &self.config {
            Some(path) => read_config(path)?,
            None => (GenConfig::default(), toml::Table::new()),
        };
        let note = |key: &str| {
            if table.contains_key(key) {
                log::info!("--{key} overrides the value in the config file");
            }
        };
        if let Some(v) = self.seed {
            note("seed");
            cfg.seed = v;
        }
        if let Some(v) = self.timeout {
            note("timeout");
            if v.is_nan() || v <= 0.0 {
                return Err(Usage(format!("--timeout must be positive, got {v}")).into());
            }
            cfg.time_bound = v;
            cfg.search.time_budget = v;
        }
        if let Some(v) = self.k {
            note("k");
            cfg.k = v;
        }
        if let Some(v) = self.d {
            note("d");
            cfg.d = v;
        }
        if let Some(v) = self.k0 {
            note("k0");
            cfg.k0 = v;
        }
        if let Some(v) = self.gamma {
            note("gamma");
            cfg.gamma = Some(v);
        }
        if let Some(v) = self.metric {
            note("metric");
            cfg.metric = v;
        }
        if let Some(v) = self.dist {
            note("dist");
            cfg.dist = v;
        }
        // A config may set `timeout` as a convenience alias.
        if self.timeout.is_none() {
            if let Some(t) = table.get("timeout").and_then(|v| v.as_float().or(v.as_integer().map(|i| i as f64))) {
                cfg.time_bound = t;
                cfg.search.time_budget = t;
            }
        }
        cfg.search.seed = cfg.seed;
        Ok(cfg)
    }
}

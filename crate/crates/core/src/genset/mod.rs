//! Plan-set generation: greedy d-distant sets, a random baseline, weight
//! sampling, ICP-sequential and the hybrid of the last two.

mod diverse;
mod tradeoff;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{set_quality, Aggregate, DistanceMetric, PlanFeatures};
use crate::exact::{big_to_f64, to_json_number};
use crate::icp::{icp, lower_convex_hull, pareto_filter, WeightDistribution};
use crate::pddl::GroundProblem;
use crate::plan::{Plan, PlanError, TimeCostPoint};
use crate::search::{SearchConfig, SearchError};

pub use diverse::{generate_diverse, generate_random_baseline};
pub use tradeoff::{generate_hybrid, generate_icp_sequential, generate_sampling, generate_sampling_with_weights};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generation settings: {0}")]
    InvalidConfig(String),
    #[error("no plan found: {0}")]
    NoPlan(SearchError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub k: usize,
    pub d: f64,
    pub metric: DistanceMetric,
    pub gamma: Option<u32>,
    pub dist: WeightDistribution,
    pub k0: usize,
    /// Seconds for the whole run.
    pub time_bound: f64,
    pub seed: u64,
    /// Solver calls allowed per requested plan in the diverse and baseline modes.
    pub attempts_per_plan: usize,
    /// Consecutive rejections that end ICP-sequential.
    pub stall_limit: usize,
    pub epsilon: f64,
    pub search: SearchConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            k: 4,
            d: 0.2,
            metric: DistanceMetric::Action,
            gamma: None,
            dist: WeightDistribution::Uniform,
            k0: 3,
            time_bound: 60.0,
            seed: 0,
            attempts_per_plan: 6,
            stall_limit: 5,
            epsilon: 1e-9,
            search: SearchConfig::default(),
        }
    }
}

impl GenConfig {
    fn check_k(&self) -> Result<(), GenError> {
        if self.k == 0 {
            return Err(GenError::InvalidConfig("k must be at least 1".into()));
        }
        if self.time_bound.is_nan() || self.time_bound <= 0.0 {
            return Err(GenError::InvalidConfig("time bound must be positive".into()));
        }
        self.search.validate().map_err(|e| GenError::InvalidConfig(e.to_string()))
    }

    fn check_diverse(&self) -> Result<(), GenError> {
        self.check_k()?;
        if !(self.d > 0.0 && self.d <= 1.0) {
            return Err(GenError::InvalidConfig(format!("d must lie in (0, 1], got {}", self.d)));
        }
        if self.gamma == Some(0) {
            return Err(GenError::InvalidConfig("gamma must be at least 1".into()));
        }
        Ok(())
    }

    fn check_hybrid(&self) -> Result<(), GenError> {
        self.check_k()?;
        if self.k0 == 0 || self.k0 >= self.k {
            return Err(GenError::InvalidConfig(format!("hybrid needs 0 < k0 < k, got k0 = {}, k = {}", self.k0, self.k)));
        }
        Ok(())
    }
}

/// SplitMix64 step, used to derive per-call seeds from the master seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaStats {
    pub min: Option<f64>,
    pub avg: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetMetrics {
    /// Keyed by metric name; `null` entries for fewer than two plans.
    pub zeta: BTreeMap<&'static str, ZetaStats>,
    pub icp: f64,
    /// Indices into the plan list.
    pub pareto: Vec<usize>,
    pub hull: Vec<usize>,
}

impl SetMetrics {
    pub fn compute(
        problem: &GroundProblem,
        plans: &[Plan],
        points: &[TimeCostPoint],
        dist: &WeightDistribution,
    ) -> Result<Self, PlanError> {
        let features = plans.iter().map(|p| PlanFeatures::extract(problem, p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_features(&features, points, dist))
    }

    pub fn from_features(features: &[PlanFeatures], points: &[TimeCostPoint], dist: &WeightDistribution) -> Self {
        let zeta = DistanceMetric::ALL
            .into_iter()
            .map(|m| {
                let q = |agg| set_quality(features, m, agg).ok().map(|v| big_to_f64(&v));
                (m.name(), ZetaStats { min: q(Aggregate::Min), avg: q(Aggregate::Avg), max: q(Aggregate::Max) })
            })
            .collect();
        let mut pareto = pareto_filter(points);
        pareto.sort_unstable();
        SetMetrics { zeta, icp: icp(points, dist), pareto, hull: lower_convex_hull(points).hull }
    }

    /// ζ_min under `metric`, with an undefined value read as 0.
    pub fn zeta_min(&self, metric: DistanceMetric) -> f64 {
        self.zeta.get(metric.name()).and_then(|z| z.min).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GenStats {
    pub solve_calls: usize,
    pub failed_calls: usize,
    pub nodes: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSetResult {
    pub method: &'static str,
    pub status: Status,
    pub plans: Vec<Plan>,
    pub points: Vec<TimeCostPoint>,
    pub metrics: SetMetrics,
    pub dist: WeightDistribution,
    pub stats: GenStats,
    /// ICP after each accepted plan in the sequential phase.
    pub trace: Vec<f64>,
    /// ICP of the sampling phase (hybrid only).
    pub phase1_icp: Option<f64>,
    pub seed: u64,
    pub wall_seconds: f64,
}

impl PlanSetResult {
    fn assemble(
        method: &'static str,
        problem: &GroundProblem,
        cfg: &GenConfig,
        plans: Vec<Plan>,
        points: Vec<TimeCostPoint>,
        stats: GenStats,
        started: Instant,
    ) -> Result<Self, GenError> {
        let metrics = SetMetrics::compute(problem, &plans, &points, &cfg.dist)?;
        let status = if plans.len() >= cfg.k { Status::Complete } else { Status::Incomplete };
        Ok(PlanSetResult {
            method,
            status,
            plans,
            points,
            metrics,
            dist: cfg.dist,
            stats,
            trace: Vec::new(),
            phase1_icp: None,
            seed: cfg.seed,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// JSON document. Everything except the `timing` object is a function
    /// of the inputs and the seed.
    pub fn to_json(&self, problem: &GroundProblem) -> serde_json::Value {
        let plans: Vec<serde_json::Value> = self
            .plans
            .iter()
            .zip(&self.points)
            .map(|(plan, pt)| {
                let mut v = serde_json::json!({
                    "steps": plan.step_names(problem),
                    "time": to_json_number(&pt.time),
                    "cost": to_json_number(&pt.cost),
                });
                if let Some(p) = &plan.provenance {
                    v["generator"] = p.generator.clone().into();
                    v["seed"] = p.seed.into();
                }
                v
            })
            .collect();
        serde_json::json!({
            "problem": problem.name,
            "method": self.method,
            "status": self.status,
            "seed": self.seed,
            "distribution": self.dist,
            "plans": plans,
            "metrics": self.metrics,
            "stats": self.stats,
            "trace": self.trace,
            "phase1_icp": self.phase1_icp,
            "timing": { "wall_seconds": self.wall_seconds },
        })
    }
}

pub(crate) fn remaining(cfg: &GenConfig, started: Instant) -> f64 {
    cfg.time_bound - started.elapsed().as_secs_f64()
}

/// Search settings for one call: derived seed and the time still available.
pub(crate) fn call_config(cfg: &GenConfig, seed: u64, started: Instant) -> SearchConfig {
    SearchConfig {
        seed,
        time_budget: cfg.search.time_budget.min(remaining(cfg, started).max(1e-3)),
        ..cfg.search.clone()
    }
}

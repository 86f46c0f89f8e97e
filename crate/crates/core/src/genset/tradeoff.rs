use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{call_config, derive_seed, remaining, GenConfig, GenError, GenStats, PlanSetResult, Status};
use crate::icp::{icp, pareto_filter, sample_weight};
use crate::pddl::GroundProblem;
use crate::plan::{project, Plan, TimeCostPoint};
use crate::search::{solve, EvaluationContext, SearchConfig};

const STREAM_WEIGHTS: u64 = 10;
const STREAM_SAMPLING: u64 = 11;
const STREAM_SEQUENTIAL: u64 = 12;

/// `k` weights drawn from the configured distribution.
pub fn sample_weights(cfg: &GenConfig, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_WEIGHTS, 0));
    (0..count).map(|_| sample_weight(&cfg.dist, &mut rng)).collect()
}

/// One `V(p, w)` search per sampled weight; duplicates and dominated plans
/// are dropped.
pub fn generate_sampling(problem: &GroundProblem, cfg: &GenConfig) -> Result<PlanSetResult, GenError> {
    cfg.check_k()?;
    generate_sampling_with_weights(problem, cfg, &sample_weights(cfg, cfg.k))
}

pub fn generate_sampling_with_weights(
    problem: &GroundProblem,
    cfg: &GenConfig,
    weights: &[f64],
) -> Result<PlanSetResult, GenError> {
    cfg.check_k()?;
    let started = Instant::now();
    let outcomes: Vec<_> = weights
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let seed = derive_seed(cfg.seed, STREAM_SAMPLING, i as u64);
            let search = SearchConfig { objective_w: Some(w), alpha_t: 0.0, ..call_config(cfg, seed, started) };
            (seed, solve(problem, &EvaluationContext::plain(), &search))
        })
        .collect();
    let mut stats = GenStats { solve_calls: outcomes.len(), ..GenStats::default() };
    let mut plans: Vec<Plan> = Vec::new();
    let mut last_err = None;
    for (seed, out) in outcomes {
        match out {
            Ok(out) => {
                stats.nodes += out.nodes;
                if !plans.iter().any(|p| p.same_steps(&out.plan)) {
                    plans.push(out.plan.with_provenance("sampling", seed));
                }
            }
            Err(e) => {
                stats.failed_calls += 1;
                last_err = Some(e);
            }
        }
    }
    if plans.is_empty() {
        return Err(GenError::NoPlan(last_err.expect("at least one weight")));
    }
    let points = plans.iter().map(|p| project(problem, p)).collect::<Result<Vec<TimeCostPoint>, _>>()?;
    let mut keep = pareto_filter(&points);
    keep.sort_unstable();
    stats.accepted = keep.len();
    stats.rejected = plans.len() - keep.len();
    let plans: Vec<Plan> = keep.iter().map(|&i| plans[i].clone()).collect();
    let points: Vec<TimeCostPoint> = keep.iter().map(|&i| points[i]).collect();
    let mut result = PlanSetResult::assemble("sampling", problem, cfg, plans, points, stats, started)?;
    result.status = Status::Complete;
    Ok(result)
}

/// Grows `seed_set` one plan at a time, keeping a plan only when it lowers
/// the ICP of the set by more than `epsilon`.
pub fn generate_icp_sequential(
    problem: &GroundProblem,
    cfg: &GenConfig,
    seed_set: Option<&PlanSetResult>,
) -> Result<PlanSetResult, GenError> {
    cfg.check_k()?;
    let started = Instant::now();
    let mut plans: Vec<Plan> = seed_set.map(|s| s.plans.clone()).unwrap_or_default();
    let mut points = plans.iter().map(|p| project(problem, p)).collect::<Result<Vec<_>, _>>()?;
    let mut current = icp(&points, &cfg.dist);
    let mut stats = GenStats::default();
    let mut trace = Vec::new();
    let mut streak = 0;
    let mut call = 0u64;
    while plans.len() < cfg.k && streak < cfg.stall_limit && remaining(cfg, started) > 0.0 {
        let seed = derive_seed(cfg.seed, STREAM_SEQUENTIAL, call);
        call += 1;
        stats.solve_calls += 1;
        let ctx = EvaluationContext::icp_points(points.clone(), cfg.dist);
        let search = SearchConfig { alpha_t: 0.0, ..call_config(cfg, seed, started) };
        let out = match solve(problem, &ctx, &search) {
            Ok(out) => out,
            Err(e) => {
                log::debug!("icp search call failed: {e}");
                stats.failed_calls += 1;
                streak += 1;
                continue;
            }
        };
        stats.nodes += out.nodes;
        let mut candidate = points.clone();
        candidate.push(out.point);
        let value = icp(&candidate, &cfg.dist);
        if !plans.iter().any(|p| p.same_steps(&out.plan)) && value < current - cfg.epsilon {
            plans.push(out.plan.with_provenance("icp-sequential", seed));
            points = candidate;
            current = value;
            trace.push(value);
            stats.accepted += 1;
            streak = 0;
        } else {
            stats.rejected += 1;
            streak += 1;
        }
    }
    if plans.is_empty() {
        return Err(GenError::NoPlan(crate::search::SearchError::Unreachable));
    }
    let mut result = PlanSetResult::assemble("icp-sequential", problem, cfg, plans, points, stats, started)?;
    result.trace = trace;
    // Stopping on a stall is normal; ICP-sequential has no d to violate.
    result.status = Status::Complete;
    Ok(result)
}

/// Sampling with `k0` weights, then ICP-sequential seeded with its output.
pub fn generate_hybrid(problem: &GroundProblem, cfg: &GenConfig) -> Result<PlanSetResult, GenError> {
    cfg.check_hybrid()?;
    let started = Instant::now();
    let phase1 = generate_sampling_with_weights(problem, cfg, &sample_weights(cfg, cfg.k0))?;
    let phase1_icp = phase1.metrics.icp;
    let left = remaining(cfg, started);
    let mut result = if left > 0.0 {
        let phase2_cfg = GenConfig { time_bound: left, ..cfg.clone() };
        generate_icp_sequential(problem, &phase2_cfg, Some(&phase1))?
    } else {
        phase1.clone()
    };
    result.stats.solve_calls += phase1.stats.solve_calls;
    result.stats.failed_calls += phase1.stats.failed_calls;
    result.stats.nodes += phase1.stats.nodes;
    result.method = "hybrid";
    result.phase1_icp = Some(phase1_icp);
    result.wall_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

use std::time::Instant;

use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{call_config, derive_seed, remaining, GenConfig, GenError, GenStats, PlanSetResult};
use crate::distance::{gamma_balanced, threshold, DistanceMetric, PlanFeatures};
use crate::pddl::GroundProblem;
use crate::plan::{project, Plan};
use crate::search::{solve, solve_from, EvaluationContext, SearchConfig};

const STREAM_DIVERSE: u64 = 1;
const STREAM_BASELINE: u64 = 2;
/// Floor on restarts per diverse call; the farthest restart is kept.
const DIVERSE_RESTARTS: usize = 6;

struct Archive<'a> {
    problem: &'a GroundProblem,
    metric: DistanceMetric,
    d: BigRational,
    d_raw: f64,
    gamma: Option<u32>,
    plans: Vec<Plan>,
    features: Vec<PlanFeatures>,
    /// `compatible[i][j]`: plans i and j are far enough apart.
    compatible: Vec<Vec<bool>>,
}

impl<'a> Archive<'a> {
    fn new(problem: &'a GroundProblem, cfg: &GenConfig) -> Self {
        Archive {
            problem,
            metric: cfg.metric,
            d: threshold(cfg.d),
            d_raw: cfg.d,
            gamma: cfg.gamma,
            plans: Vec::new(),
            features: Vec::new(),
            compatible: Vec::new(),
        }
    }

    fn contains(&self, plan: &Plan) -> bool {
        self.plans.iter().any(|p| p.same_steps(plan))
    }

    fn push(&mut self, plan: Plan) -> Result<(), GenError> {
        let f = PlanFeatures::extract(self.problem, &plan)?;
        let row: Vec<bool> = self
            .plans
            .iter()
            .zip(&self.features)
            .map(|(q, g)| {
                self.metric.between(&f, g) >= self.d && self.gamma.is_none_or(|gm| gamma_balanced(&plan, q, self.d_raw, gm))
            })
            .collect();
        for (i, ok) in row.iter().enumerate() {
            self.compatible[i].push(*ok);
        }
        let mut row = row;
        row.push(false);
        self.compatible.push(row);
        self.plans.push(plan);
        self.features.push(f);
        Ok(())
    }

    /// `|CPlans(i)|`: archive plans d-distant from plan i.
    fn cplans(&self, i: usize) -> Vec<usize> {
        (0..self.plans.len()).filter(|&j| self.compatible[i][j]).collect()
    }

    /// Index maximising `|CPlans|`; ties are broken at random.
    fn p_max(&self, rng: &mut ChaCha8Rng) -> usize {
        let sizes: Vec<usize> = (0..self.plans.len()).map(|i| self.cplans(i).len()).collect();
        let top = sizes.iter().copied().max().unwrap_or(0);
        let ties: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] == top).collect();
        *ties.choose(rng).expect("archive is never empty here")
    }

    /// Greedy mutually-distant subset grown from `start`: each step adds the
    /// compatible plan farthest from the current set.
    fn greedy_from(&self, start: usize, k: usize) -> Vec<usize> {
        let mut set = vec![start];
        while set.len() < k {
            let next = (0..self.plans.len())
                .filter(|j| !set.contains(j) && set.iter().all(|&i| self.compatible[i][*j]))
                .map(|j| (self.min_distance(j, &set), j))
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            match next {
                Some((_, j)) => set.push(j),
                None => break,
            }
        }
        set
    }

    fn min_distance(&self, j: usize, set: &[usize]) -> BigRational {
        set.iter()
            .map(|&i| self.metric.between(&self.features[i], &self.features[j]))
            .min()
            .expect("set is never empty")
    }

    fn spread(&self, set: &[usize]) -> Option<BigRational> {
        set.iter().enumerate().flat_map(|(a, &i)| set[a + 1..].iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.metric.between(&self.features[i], &self.features[j]))
            .min()
    }

    /// Largest greedy clique; among equal sizes the one with the widest
    /// closest pair.
    fn best_subset(&self, k: usize) -> Vec<usize> {
        let mut best: Vec<usize> = Vec::new();
        let mut best_spread = None;
        for start in 0..self.plans.len() {
            let s = self.greedy_from(start, k);
            let spread = self.spread(&s);
            if s.len() > best.len() || (s.len() == best.len() && spread > best_spread) {
                best = s;
                best_spread = spread;
            }
        }
        best.sort_unstable();
        best
    }
}

/// Greedy d-distant k-set: repeated diversity-biased searches against the
/// archive plan with the most d-distant partners.
pub fn generate_diverse(problem: &GroundProblem, cfg: &GenConfig) -> Result<PlanSetResult, GenError> {
    cfg.check_diverse()?;
    let started = Instant::now();
    let mut stats = GenStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_DIVERSE, u64::MAX));
    let mut archive = Archive::new(problem, cfg);

    let first_seed = derive_seed(cfg.seed, STREAM_DIVERSE, 0);
    stats.solve_calls += 1;
    let first = solve(problem, &EvaluationContext::plain(), &call_config(cfg, first_seed, started)).map_err(GenError::NoPlan)?;
    stats.nodes += first.nodes;
    archive.push(first.plan.with_provenance("diverse", first_seed))?;

    let max_calls = cfg.k.saturating_mul(cfg.attempts_per_plan).max(1);
    let mut call = 1u64;
    while archive.best_subset(cfg.k).len() < cfg.k && (call as usize) < max_calls && remaining(cfg, started) > 0.0 {
        let p_max = archive.p_max(&mut rng);
        let mut pool = archive.cplans(p_max);
        pool.push(p_max);
        let source = *pool.choose(&mut rng).expect("pool holds p_max");
        let prefix: Vec<_> = archive.plans[source].steps.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let ctx = EvaluationContext::diverse(problem, archive.plans[p_max].clone(), cfg.d, archive.plans.len(), cfg.k)
            .map_err(GenError::NoPlan)?
            .avoiding(archive.best_subset(cfg.k).into_iter().map(|i| archive.plans[i].clone()).collect());
        let seed = derive_seed(cfg.seed, STREAM_DIVERSE, call);
        call += 1;
        stats.solve_calls += 1;
        // Every restart jittered, so equally distant plans are picked at random.
        let search = SearchConfig {
            greedy_first: false,
            restarts: cfg.search.restarts.max(DIVERSE_RESTARTS),
            ..call_config(cfg, seed, started)
        };
        match solve_from(problem, &ctx, &search, &prefix) {
            Ok(out) => {
                stats.nodes += out.nodes;
                if archive.contains(&out.plan) {
                    stats.rejected += 1;
                } else {
                    stats.accepted += 1;
                    archive.push(out.plan.with_provenance("diverse", seed))?;
                }
            }
            Err(e) => {
                log::debug!("diverse search call failed: {e}");
                stats.failed_calls += 1;
            }
        }
    }

    let chosen = archive.best_subset(cfg.k);
    let plans: Vec<Plan> = chosen.iter().map(|&i| archive.plans[i].clone()).collect();
    let points = plans.iter().map(|p| project(problem, p)).collect::<Result<Vec<_>, _>>()?;
    PlanSetResult::assemble("diverse", problem, cfg, plans, points, stats, started)
}

/// `k` independent seeded searches, duplicates removed, no distance constraint.
pub fn generate_random_baseline(problem: &GroundProblem, cfg: &GenConfig) -> Result<PlanSetResult, GenError> {
    cfg.check_k()?;
    let started = Instant::now();
    let outcomes: Vec<_> = (0..cfg.k as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, STREAM_BASELINE, i);
            // One jittered descent per seed: random tie-breaking, no best-of.
            let search = SearchConfig {
                restarts: 1,
                greedy_first: false,
                noise: cfg.search.noise.max(0.3),
                ..call_config(cfg, seed, started)
            };
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
                if plans.iter().any(|p| p.same_steps(&out.plan)) {
                    stats.rejected += 1;
                } else {
                    stats.accepted += 1;
                    plans.push(out.plan.with_provenance("baseline", seed));
                }
            }
            Err(e) => {
                stats.failed_calls += 1;
                last_err = Some(e);
            }
        }
    }
    if plans.is_empty() {
        return Err(GenError::NoPlan(last_err.expect("k >= 1 calls were made")));
    }
    let points = plans.iter().map(|p| project(problem, p)).collect::<Result<Vec<_>, _>>()?;
    let mut result = PlanSetResult::assemble("baseline", problem, cfg, plans, points, stats, started)?;
    // The baseline reports what it found; it never promised k distinct plans.
    result.status = super::Status::Complete;
    Ok(result)
}

//! Seeded greedy best-first forward search guided by a relaxed-plan
//! heuristic and a pluggable evaluation (plain, diversity-biased, or ICP
//! estimate).

mod evaluate;
mod relaxed;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exact::to_f64;
use crate::icp::icp;
use crate::pddl::{ActionId, GroundProblem};
use crate::plan::{applicable, apply, must_precede, project, Plan, PlanError, TimeCostPoint};

pub use evaluate::{
    adaptive_alpha_d, alpha_d_for, alphas_for, evaluate, raw_terms, AlphaD, CandidateEstimate, DiverseState, EvaluationContext,
    IcpState, Normalizer, SearchConfig,
};
pub use relaxed::{relaxed_plan, RelaxedOptions, RelaxedPlan, Relaxation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("search budget exhausted after {nodes} expansions")]
    BudgetExhausted { nodes: usize },
    #[error("goal unreachable")]
    Unreachable,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub plan: Plan,
    pub point: TimeCostPoint,
    /// Expansions over all restarts.
    pub nodes: usize,
}

struct Node {
    state: FixedBitSet,
    steps: Vec<ActionId>,
    finish: Vec<f64>,
    cost: f64,
    raw: [f64; 4],
    alphas: [f64; 4],
    jitter: f64,
}

impl Node {
    fn makespan(&self) -> f64 {
        self.finish.iter().copied().fold(0.0, f64::max)
    }
}

struct Keyed {
    key: f64,
    tie: u64,
    node: usize,
}

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Keyed {}

impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.tie.cmp(&self.tie))
    }
}

impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Searcher<'a> {
    problem: &'a GroundProblem,
    ctx: &'a EvaluationContext,
    cfg: &'a SearchConfig,
    relax: Relaxation,
    weights: Vec<f64>,
    reference: Option<&'a FixedBitSet>,
    norm: Normalizer,
    atom_times: Vec<f64>,
}

impl<'a> Searcher<'a> {
    fn new(problem: &'a GroundProblem, ctx: &'a EvaluationContext, cfg: &'a SearchConfig) -> Self {
        let ([ae, at, _], _) = cfg.normalized();
        let mix = match (ctx, cfg.objective_w) {
            (EvaluationContext::IcpEst(s), _) => Some(s.dist.mean()),
            (_, Some(w)) => Some(w),
            _ => None,
        };
        let weights = problem
            .actions
            .iter()
            .map(|a| {
                let (c, d) = (to_f64(&a.cost), to_f64(&a.duration));
                match mix {
                    Some(w) => w * d + (1.0 - w) * c,
                    None if ae + at > 0.0 => ae * c + at * d,
                    None => 1.0,
                }
            })
            .collect();
        let reference = match ctx {
            EvaluationContext::Diverse(s) => Some(&s.reference_set),
            _ => None,
        };
        Searcher {
            problem,
            ctx,
            cfg,
            relax: Relaxation::new(problem),
            weights,
            reference,
            norm: Normalizer::default(),
            atom_times: vec![0.0; problem.atom_count()],
        }
    }

    fn diversity_active(&self) -> bool {
        matches!(self.ctx, EvaluationContext::Diverse(_))
            && !matches!(self.cfg.alpha_d, AlphaD::Fixed(x) if x <= 0.0)
    }

    fn extend(&self, parent: &Node, a: ActionId) -> Node {
        let action = self.problem.action(a);
        let start = parent
            .steps
            .iter()
            .zip(&parent.finish)
            .filter(|(s, _)| must_precede(self.problem.action(**s), action))
            .map(|(_, f)| *f)
            .fold(0.0, f64::max);
        let mut state = parent.state.clone();
        apply(&mut state, action);
        let mut steps = parent.steps.clone();
        steps.push(a);
        let mut finish = parent.finish.clone();
        finish.push(start + to_f64(&action.duration));
        Node { state, steps, finish, cost: parent.cost + to_f64(&action.cost), raw: [0.0; 4], alphas: [0.0; 4], jitter: 1.0 }
    }

    /// Raw terms and weights of a node, or `None` when the relaxation
    /// proves a dead end.
    fn score(&mut self, node: &Node) -> Option<([f64; 4], [f64; 4])> {
        for x in node.state.ones() {
            self.atom_times[x] = 0.0;
        }
        for (s, f) in node.steps.iter().zip(&node.finish) {
            for x in &self.problem.action(*s).add {
                self.atom_times[x.index()] = *f;
            }
        }
        let mut prefix = FixedBitSet::with_capacity(self.problem.actions.len());
        for s in &node.steps {
            prefix.insert(s.index());
        }
        let penalty = if self.diversity_active() {
            self.reference.map(|r| {
                let mut p = r.clone();
                p.difference_with(&prefix);
                p
            })
        } else {
            None
        };
        let opts = RelaxedOptions {
            weights: Some(&self.weights),
            penalty: penalty.as_ref(),
            atom_times: Some(&self.atom_times),
            prefix_makespan: node.makespan(),
        };
        let rp = self.relax.plan(self.problem, &node.state, &self.problem.goals, &opts)?;
        let cand = CandidateEstimate::new(&prefix, &rp.actions, node.cost + rp.cost, rp.makespan, self.reference);
        Some((raw_terms(&cand, self.ctx, self.cfg), alphas_for(&cand, self.ctx, self.cfg)))
    }

    fn run(
        &mut self,
        seed_prefix: &[ActionId],
        rng: &mut ChaCha8Rng,
        noisy: bool,
        budget: usize,
        started: Instant,
    ) -> (Option<Vec<ActionId>>, usize, bool) {
        let goal = self.problem.goal_set();
        let mut root = Node {
            state: self.problem.init_state(),
            steps: vec![],
            finish: vec![],
            cost: 0.0,
            raw: [0.0; 4],
            alphas: [0.0; 4],
            jitter: 1.0,
        };
        for &a in seed_prefix {
            if applicable(&root.state, self.problem.action(a)) {
                root = self.extend(&root, a);
            }
        }
        let mut arena: Vec<Node> = Vec::new();
        let mut open = BinaryHeap::new();
        // Best node seen so far for each state.
        let mut seen: HashMap<FixedBitSet, usize> = HashMap::new();
        let mut tie = 0u64;
        let mut expanded = 0usize;
        let noise = if noisy { self.cfg.noise } else { 0.0 };
        let mut push = |this: &mut Self,
                        mut node: Node,
                        arena: &mut Vec<Node>,
                        open: &mut BinaryHeap<Keyed>,
                        seen: &mut HashMap<FixedBitSet, usize>,
                        rng: &mut ChaCha8Rng| {
            let Some((raw, alphas)) = this.score(&node) else { return };
            let grew = this.norm.observe(&raw);
            let plain = this.norm.combine(&raw, &alphas);
            if let Some(&old) = seen.get(&node.state) {
                if this.norm.combine(&arena[old].raw, &arena[old].alphas) <= plain {
                    return;
                }
            }
            node.raw = raw;
            node.alphas = alphas;
            node.jitter = if noise > 0.0 { 1.0 + noise * (2.0 * rng.random::<f64>() - 1.0) } else { 1.0 };
            seen.insert(node.state.clone(), arena.len());
            open.push(Keyed { key: plain * node.jitter, tie, node: arena.len() });
            tie += 1;
            arena.push(node);
            if grew {
                // Keys depend on the maxima; re-key the whole frontier.
                let entries: Vec<Keyed> = std::mem::take(open).into_vec();
                *open = entries
                    .into_iter()
                    .map(|e| {
                        let n = &arena[e.node];
                        Keyed { key: this.norm.combine(&n.raw, &n.alphas) * n.jitter, ..e }
                    })
                    .collect();
            }
        };
        push(self, root, &mut arena, &mut open, &mut seen, rng);
        let time_limit = self.cfg.time_budget;
        while let Some(Keyed { node, .. }) = open.pop() {
            if seen.get(&arena[node].state) != Some(&node) {
                continue;
            }
            if arena[node].state.is_superset(&goal) {
                return (Some(std::mem::take(&mut arena[node].steps)), expanded, false);
            }
            if expanded >= budget || started.elapsed().as_secs_f64() > time_limit {
                return (None, expanded, true);
            }
            expanded += 1;
            let mut succ: Vec<ActionId> =
                self.problem.action_ids().filter(|a| applicable(&arena[node].state, self.problem.action(*a))).collect();
            if noise > 0.0 {
                // Random order decides which of several equal-scoring paths claims a state.
                succ.shuffle(rng);
            }
            for a in succ {
                let child = self.extend(&arena[node], a);
                push(self, child, &mut arena, &mut open, &mut seen, rng);
            }
        }
        (None, expanded, false)
    }
}

/// The mode's exact objective, compared lexicographically.
fn exact_objective(plan: &Plan, point: &TimeCostPoint, ctx: &EvaluationContext, cfg: &SearchConfig) -> (f64, f64) {
    let ([ae, at, _], _) = cfg.normalized();
    let plain = match cfg.objective_w {
        Some(w) => crate::icp::value(point, w),
        None => ae * to_f64(&point.cost) + at * to_f64(&point.time),
    };
    match ctx {
        EvaluationContext::Plain => (plain, 0.0),
        EvaluationContext::Diverse(s) => {
            if matches!(cfg.alpha_d, AlphaD::Fixed(x) if x <= 0.0) {
                (plain, 0.0)
            } else {
                // Distance to the nearest of the reference and the plans to keep clear of.
                let delta = std::iter::once(&s.reference)
                    .chain(&s.avoid)
                    .map(|q| crate::distance::action_distance(plan, q))
                    .min()
                    .expect("reference is always present");
                (-crate::exact::big_to_f64(&delta), plain)
            }
        }
        EvaluationContext::IcpEst(s) => {
            let mut pts = s.points.clone();
            pts.push(*point);
            (icp(&pts, &s.dist), plain)
        }
    }
}

/// Finds a plan for `problem`. Restarts share the node budget; the best
/// plan under the mode's exact objective is returned.
pub fn solve(problem: &GroundProblem, ctx: &EvaluationContext, cfg: &SearchConfig) -> Result<SolveOutcome, SearchError> {
    solve_from(problem, ctx, cfg, &[])
}

/// Like [`solve`], but the first restart begins from the applicable
/// subsequence of `seed_prefix`.
pub fn solve_from(
    problem: &GroundProblem,
    ctx: &EvaluationContext,
    cfg: &SearchConfig,
    seed_prefix: &[ActionId],
) -> Result<SolveOutcome, SearchError> {
    cfg.validate()?;
    let started = Instant::now();
    let restarts = if cfg.noise > 0.0 { cfg.restarts } else { 1 };
    let mut searcher = Searcher::new(problem, ctx, cfg);
    let mut total = 0usize;
    let mut best: Option<((f64, f64), Plan, TimeCostPoint)> = None;
    let mut exhausted = false;
    for r in 0..restarts {
        let remaining = cfg.node_budget.saturating_sub(total);
        if remaining == 0 {
            break;
        }
        let share = remaining / (restarts - r);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        searcher.norm = Normalizer::default();
        let prefix = if r == 0 { seed_prefix } else { &[] };
        let (found, used, hit_budget) = searcher.run(prefix, &mut rng, r > 0 || !cfg.greedy_first, share.max(1), started);
        total += used;
        exhausted |= hit_budget;
        if let Some(steps) = found {
            let plan = Plan::new(steps).with_provenance("solve", cfg.seed);
            let point = project(problem, &plan)?;
            let key = exact_objective(&plan, &point, ctx, cfg);
            let better = match &best {
                None => true,
                Some((k, _, _)) => key.0 < k.0 || (key.0 == k.0 && key.1 < k.1),
            };
            if better {
                best = Some((key, plan, point));
            }
        }
        if started.elapsed().as_secs_f64() > cfg.time_budget {
            break;
        }
    }
    match best {
        Some((_, plan, point)) => Ok(SolveOutcome { plan, point, nodes: total }),
        None if exhausted => Err(SearchError::BudgetExhausted { nodes: total }),
        None => Err(SearchError::Unreachable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::action_distance;
    use crate::exact::{big_to_f64, Quantity};
    use crate::pddl::{load_durations, parse_domain, parse_problem};
    use crate::plan::simulate;

    fn task(domain: &str, problem: &str) -> GroundProblem {
        parse_problem(problem, &parse_domain(domain).unwrap()).unwrap()
    }

    fn two_route() -> GroundProblem {
        task(include_str!("../../fixtures/two-route-domain.pddl"), include_str!("../../fixtures/two-route-problem.pddl"))
    }

    fn logistics() -> GroundProblem {
        let p = task(
            include_str!("../../fixtures/logistics3-domain.pddl"),
            include_str!("../../fixtures/logistics3-problem.pddl"),
        );
        load_durations(p, include_str!("../../fixtures/logistics3-domain.durations.json")).unwrap().problem
    }

    #[test]
    fn goals_in_init_give_the_empty_plan() {
        let p = task(
            "(define (domain d) (:predicates (g)) (:action a :parameters () :precondition (g) :effect (g)))",
            "(define (problem p) (:domain d) (:init (g)) (:goal (g)))",
        );
        let out = solve(&p, &EvaluationContext::plain(), &SearchConfig::default()).unwrap();
        assert!(out.plan.is_empty());
    }

    #[test]
    fn unreachable_goal_fails() {
        let p = task(
            "(define (domain d) (:predicates (g) (h)) (:action a :parameters () :precondition (h) :effect (g)))",
            "(define (problem p) (:domain d) (:init) (:goal (g)))",
        );
        assert_eq!(solve(&p, &EvaluationContext::plain(), &SearchConfig::default()).unwrap_err(), SearchError::Unreachable);
    }

    #[test]
    fn objective_weight_picks_the_route() {
        let p = logistics();
        let run = |w| {
            let cfg = SearchConfig { objective_w: Some(w), alpha_t: 0.0, ..SearchConfig::default() };
            solve(&p, &EvaluationContext::plain(), &cfg).unwrap().point
        };
        let fast = run(1.0);
        let cheap = run(0.0);
        assert!(fast.time <= cheap.time);
        assert_eq!(fast, TimeCostPoint::new(4, 12));
        assert_eq!(cheap, TimeCostPoint::new(12, 4));
    }

    #[test]
    fn diverse_mode_avoids_the_reference_route() {
        let p = two_route();
        let reference = Plan::new(vec![p.action_id("prep-a").unwrap(), p.action_id("finish-a").unwrap()]);
        let ctx = EvaluationContext::diverse(&p, reference.clone(), 0.5, 1, 2).unwrap();
        for seed in 0..5 {
            let out = solve(&p, &ctx, &SearchConfig { seed, ..SearchConfig::default() }).unwrap();
            assert!(big_to_f64(&action_distance(&out.plan, &reference)) >= 0.5, "seed {seed}");
        }
    }

    #[test]
    fn zero_diversity_weight_matches_plain_search() {
        let p = logistics();
        let reference = solve(&p, &EvaluationContext::plain(), &SearchConfig::default()).unwrap().plan;
        let ctx = EvaluationContext::diverse(&p, reference, 0.5, 1, 2).unwrap();
        for seed in 0..4 {
            let cfg = SearchConfig { seed, alpha_d: AlphaD::Fixed(0.0), ..SearchConfig::default() };
            let a = solve(&p, &ctx, &cfg).unwrap();
            let b = solve(&p, &EvaluationContext::plain(), &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn same_seed_same_plan() {
        let p = task(include_str!("../../fixtures/blocks-domain.pddl"), include_str!("../../fixtures/blocks-problem.pddl"));
        let cfg = SearchConfig { seed: 42, noise: 0.5, ..SearchConfig::default() };
        let a = solve(&p, &EvaluationContext::plain(), &cfg).unwrap();
        let b = solve(&p, &EvaluationContext::plain(), &cfg).unwrap();
        assert_eq!(a, b);
        simulate(&p, &a.plan).unwrap();
    }

    #[test]
    fn icp_mode_fills_the_gap() {
        let p = logistics();
        let ctx = EvaluationContext::icp_points(vec![TimeCostPoint::new(4, 12)], crate::icp::WeightDistribution::Uniform);
        let out = solve(&p, &ctx, &SearchConfig { alpha_t: 0.0, ..SearchConfig::default() }).unwrap();
        assert_eq!(out.point.cost, Quantity::from_integer(4));
    }

    #[test]
    fn tiny_budget_reports_exhaustion() {
        let p = logistics();
        let cfg = SearchConfig { node_budget: 1, noise: 0.0, ..SearchConfig::default() };
        assert!(matches!(solve(&p, &EvaluationContext::plain(), &cfg), Err(SearchError::BudgetExhausted { .. })));
    }

    #[test]
    fn seed_prefix_is_followed() {
        let p = two_route();
        let prefix = [p.action_id("prep-b-alt").unwrap()];
        let cfg = SearchConfig { noise: 0.0, ..SearchConfig::default() };
        let out = solve_from(&p, &EvaluationContext::plain(), &cfg, &prefix).unwrap();
        assert_eq!(out.plan.steps[0], prefix[0]);
    }
}

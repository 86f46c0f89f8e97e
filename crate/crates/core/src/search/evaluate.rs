use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::icp::{icp, WeightDistribution};
use crate::pddl::{ActionId, GroundProblem};
use crate::plan::{project, simulate, Plan, TimeCostPoint};

use super::SearchError;

/// Weight of the diversity term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaD {
    Fixed(f64),
    /// `min(1, d / max(δ_a(p, p0), 0.01) · n / k)`.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub alpha_e: f64,
    pub alpha_t: f64,
    pub alpha_s: f64,
    pub alpha_d: AlphaD,
    /// Optimise `V(p, w)` in place of plain cost.
    pub objective_w: Option<f64>,
    /// Key jitter amplitude in `[0, 1]`; zero disables restarts.
    pub noise: f64,
    /// Run the first restart without jitter.
    pub greedy_first: bool,
    pub seed: u64,
    pub node_budget: usize,
    /// Seconds.
    pub time_budget: f64,
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            alpha_e: 1.0,
            alpha_t: 0.0,
            alpha_s: 0.25,
            alpha_d: AlphaD::Adaptive,
            objective_w: None,
            noise: 0.2,
            greedy_first: true,
            seed: 0,
            node_budget: 200_000,
            time_budget: 60.0,
            restarts: 3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::InvalidConfig(msg));
        let fixed_d = match self.alpha_d {
            AlphaD::Fixed(x) => x,
            AlphaD::Adaptive => 0.0,
        };
        for (name, v) in [("alpha_e", self.alpha_e), ("alpha_t", self.alpha_t), ("alpha_s", self.alpha_s), ("alpha_d", fixed_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        if self.alpha_e + self.alpha_t + self.alpha_s <= 0.0 {
            return bad("at least one of alpha_e, alpha_t, alpha_s must be positive".into());
        }
        if let Some(w) = self.objective_w {
            if !(0.0..=1.0).contains(&w) {
                return bad(format!("objective_w must lie in [0, 1], got {w}"));
            }
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise must lie in [0, 1], got {}", self.noise));
        }
        if self.node_budget == 0 || self.time_budget.is_nan() || self.time_budget <= 0.0 || self.restarts == 0 {
            return bad("node_budget, time_budget and restarts must be positive".into());
        }
        Ok(())
    }

    /// `(α_E, α_T, α_S)` divided by their maximum, and a fixed `α_D` scaled
    /// the same way.
    pub(crate) fn normalized(&self) -> ([f64; 3], Option<f64>) {
        let fixed = match self.alpha_d {
            AlphaD::Fixed(x) => Some(x),
            AlphaD::Adaptive => None,
        };
        let m = [self.alpha_e, self.alpha_t, self.alpha_s, fixed.unwrap_or(0.0)].into_iter().fold(0.0, f64::max);
        ([self.alpha_e / m, self.alpha_t / m, self.alpha_s / m], fixed.map(|x| x / m))
    }
}

pub fn adaptive_alpha_d(d: f64, delta: f64, generated: usize, k: usize) -> f64 {
    let base = d / delta.max(0.01);
    (base * generated as f64 / k.max(1) as f64).min(1.0)
}

#[derive(Debug, Clone)]
pub struct DiverseState {
    pub reference: Plan,
    pub d: f64,
    /// Plans generated so far and the target set size (adaptive `α_D`).
    pub generated: usize,
    pub target_k: usize,
    /// Further plans the result should stay away from. They only take part
    /// in choosing among restarts, not in the node evaluation.
    pub avoid: Vec<Plan>,
    pub(crate) reference_set: FixedBitSet,
}

#[derive(Debug, Clone)]
pub struct IcpState {
    pub points: Vec<TimeCostPoint>,
    pub dist: WeightDistribution,
}

#[derive(Debug, Clone)]
pub enum EvaluationContext {
    Plain,
    Diverse(DiverseState),
    IcpEst(IcpState),
}

impl EvaluationContext {
    pub fn plain() -> Self {
        EvaluationContext::Plain
    }

    pub fn diverse(problem: &GroundProblem, reference: Plan, d: f64, generated: usize, target_k: usize) -> Result<Self, SearchError> {
        simulate(problem, &reference)?;
        let mut reference_set = FixedBitSet::with_capacity(problem.actions.len());
        for a in &reference.steps {
            reference_set.insert(a.index());
        }
        Ok(EvaluationContext::Diverse(DiverseState { reference, d, generated, target_k, avoid: Vec::new(), reference_set }))
    }

    /// Adds plans to keep clear of when choosing among restarts.
    pub fn avoiding(mut self, plans: Vec<Plan>) -> Self {
        if let EvaluationContext::Diverse(s) = &mut self {
            s.avoid = plans;
        }
        self
    }

    pub fn icp_est(problem: &GroundProblem, plans: &[Plan], dist: WeightDistribution) -> Result<Self, SearchError> {
        let points = plans.iter().map(|p| project(problem, p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::icp_points(points, dist))
    }

    pub fn icp_points(points: Vec<TimeCostPoint>, dist: WeightDistribution) -> Self {
        EvaluationContext::IcpEst(IcpState { points, dist })
    }
}

/// A partial plan together with its relaxed continuation, summarised.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEstimate {
    /// Estimated total cost and makespan of prefix plus continuation.
    pub cost: f64,
    pub time: f64,
    /// `|p_R|`.
    pub relaxed_len: usize,
    /// Reference-plan actions, absent from the prefix, that the
    /// continuation would re-introduce.
    pub reintroduced: usize,
    /// Reference-plan actions already committed in the prefix.
    pub committed: usize,
    /// `δ_a` between the candidate's action set and the reference.
    pub delta: f64,
}

impl CandidateEstimate {
    /// Builds the estimate from a prefix action set, a continuation and
    /// the reference (if any).
    pub fn new(
        prefix: &FixedBitSet,
        relaxed: &[ActionId],
        cost: f64,
        time: f64,
        reference: Option<&FixedBitSet>,
    ) -> Self {
        let (reintroduced, committed, delta) = match reference {
            None => (0, 0, 0.0),
            Some(r) => {
                let mut candidate = prefix.clone();
                let mut reintroduced = 0;
                for a in relaxed {
                    if r.contains(a.index()) && !prefix.contains(a.index()) && !candidate.contains(a.index()) {
                        reintroduced += 1;
                    }
                    candidate.insert(a.index());
                }
                let committed = prefix.intersection(r).count();
                let inter = candidate.intersection(r).count();
                let union = candidate.union(r).count();
                let delta = if union == 0 { 0.0 } else { 1.0 - inter as f64 / union as f64 };
                (reintroduced, committed, delta)
            }
        };
        CandidateEstimate { cost, time, relaxed_len: relaxed.len(), reintroduced, committed, delta }
    }
}

/// Running maxima of the raw terms, used to bring each into `[0, 1]`.
#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    max: [f64; 4],
}

impl Normalizer {
    /// Folds `raw` into the maxima; true when any maximum grew.
    pub fn observe(&mut self, raw: &[f64; 4]) -> bool {
        let mut grew = false;
        for (m, r) in self.max.iter_mut().zip(raw) {
            if r.abs() > *m {
                *m = r.abs();
                grew = true;
            }
        }
        grew
    }

    /// `Σ α_i · raw_i / max_i` under the current maxima.
    pub fn combine(&self, raw: &[f64; 4], alphas: &[f64; 4]) -> f64 {
        let mut score = 0.0;
        for i in 0..4 {
            if alphas[i] > 0.0 {
                let scaled = if self.max[i] > 0.0 { raw[i] / self.max[i] } else { raw[i] };
                score += alphas[i] * scaled;
            }
        }
        score
    }
}

/// Raw terms `[execution, temporal, search, diversity]` before weighting.
pub fn raw_terms(c: &CandidateEstimate, ctx: &EvaluationContext, cfg: &SearchConfig) -> [f64; 4] {
    let execution = match ctx {
        EvaluationContext::IcpEst(s) => {
            let mut pts = s.points.clone();
            pts.push(estimate_point(c.time, c.cost));
            icp(&pts, &s.dist)
        }
        _ => match cfg.objective_w {
            Some(w) => w * c.time + (1.0 - w) * c.cost,
            None => c.cost,
        },
    };
    let diversity = match ctx {
        EvaluationContext::Diverse(_) => (c.committed + c.reintroduced) as f64,
        _ => 0.0,
    };
    [execution, c.time, c.relaxed_len as f64, diversity]
}

/// Effective diversity weight for this candidate.
pub fn alpha_d_for(c: &CandidateEstimate, ctx: &EvaluationContext, cfg: &SearchConfig) -> f64 {
    let EvaluationContext::Diverse(s) = ctx else { return 0.0 };
    match cfg.normalized().1 {
        Some(x) => x,
        None => adaptive_alpha_d(s.d, c.delta, s.generated, s.target_k),
    }
}

/// Normalised `[α_E, α_T, α_S, α_D]` for this candidate.
pub fn alphas_for(c: &CandidateEstimate, ctx: &EvaluationContext, cfg: &SearchConfig) -> [f64; 4] {
    let ([ae, at, as_], _) = cfg.normalized();
    [ae, at, as_, alpha_d_for(c, ctx, cfg)]
}

/// Weighted, normalised score; lower is better.
pub fn evaluate(c: &CandidateEstimate, ctx: &EvaluationContext, cfg: &SearchConfig, norm: &mut Normalizer) -> f64 {
    let raw = raw_terms(c, ctx, cfg);
    norm.observe(&raw);
    norm.combine(&raw, &alphas_for(c, ctx, cfg))
}

fn estimate_point(time: f64, cost: f64) -> TimeCostPoint {
    // Estimates are snapped to a 1/1024 grid to keep the rationals small.
    let q = |x: f64| crate::exact::Quantity::new((x.min(1e12) * 1024.0).round() as i64, 1024);
    TimeCostPoint { time: q(time), cost: q(cost) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(time: f64, cost: f64) -> CandidateEstimate {
        CandidateEstimate { cost, time, relaxed_len: 2, reintroduced: 1, committed: 1, delta: 0.5 }
    }

    #[test]
    fn icp_term_of_single_candidate_is_closed_form() {
        let ctx = EvaluationContext::icp_points(vec![], WeightDistribution::Uniform);
        let raw = raw_terms(&est(12.0, 5.0), &ctx, &SearchConfig::default());
        assert!((raw[0] - (5.0 + (12.0 - 5.0) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn icp_term_prefers_the_cheap_slow_completion() {
        let existing = vec![TimeCostPoint::new(6, 22), TimeCostPoint::new(10, 12)];
        let ctx = EvaluationContext::icp_points(existing, WeightDistribution::Uniform);
        let cfg = SearchConfig { alpha_t: 0.0, alpha_s: 0.0, ..SearchConfig::default() };
        let mut norm = Normalizer::default();
        let fast = evaluate(&est(4.0, 25.0), &ctx, &cfg, &mut norm);
        let slow = evaluate(&est(12.0, 5.0), &ctx, &cfg, &mut norm);
        assert!(slow < fast, "{slow} vs {fast}");
        let raw_slow = raw_terms(&est(12.0, 5.0), &ctx, &cfg)[0];
        let raw_fast = raw_terms(&est(4.0, 25.0), &ctx, &cfg)[0];
        assert!(raw_slow < raw_fast);
    }

    #[test]
    fn zero_alpha_d_matches_plain() {
        let p = crate::pddl::parse_problem(
            include_str!("../../fixtures/two-route-problem.pddl"),
            &crate::pddl::parse_domain(include_str!("../../fixtures/two-route-domain.pddl")).unwrap(),
        )
        .unwrap();
        let reference = Plan::new(vec![p.action_id("prep-a").unwrap(), p.action_id("finish-a").unwrap()]);
        let diverse = EvaluationContext::diverse(&p, reference, 0.5, 1, 2).unwrap();
        let cfg = SearchConfig { alpha_d: AlphaD::Fixed(0.0), ..SearchConfig::default() };
        let c = est(3.0, 2.0);
        let a = evaluate(&c, &diverse, &cfg, &mut Normalizer::default());
        let b = evaluate(&c, &EvaluationContext::Plain, &cfg, &mut Normalizer::default());
        assert_eq!(a, b);
    }

    #[test]
    fn adaptive_weight_grows_with_generated_plans() {
        let mut last = 0.0;
        for n in 0..12 {
            let a = adaptive_alpha_d(0.5, 0.2, n, 4);
            assert!(a >= last && a <= 1.0);
            last = a;
        }
        assert_eq!(adaptive_alpha_d(0.5, 0.0, 1, 100), 0.5 / 0.01 / 100.0);
        assert_eq!(last, 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let none = SearchConfig { alpha_e: 0.0, alpha_t: 0.0, alpha_s: 0.0, ..SearchConfig::default() };
        assert!(none.validate().is_err());
        assert!(SearchConfig { noise: 1.5, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { alpha_t: -1.0, ..SearchConfig::default() }.validate().is_err());
        let (alphas, fixed) = SearchConfig { alpha_e: 2.0, alpha_t: 1.0, alpha_s: 0.5, alpha_d: AlphaD::Fixed(4.0), ..SearchConfig::default() }.normalized();
        assert_eq!((alphas, fixed), ([0.5, 0.25, 0.125], Some(1.0)));
    }

    #[test]
    fn candidate_counts_reference_overlap() {
        let mut prefix = FixedBitSet::with_capacity(6);
        prefix.insert(0);
        let mut reference = FixedBitSet::with_capacity(6);
        reference.insert(0);
        reference.insert(2);
        reference.insert(3);
        let c = CandidateEstimate::new(&prefix, &[ActionId(2), ActionId(4)], 0.0, 0.0, Some(&reference));
        assert_eq!((c.committed, c.reintroduced), (1, 1));
        // candidate {0,2,4} vs {0,2,3}: 2 shared of 4
        assert!((c.delta - 0.5).abs() < 1e-12);
    }
}

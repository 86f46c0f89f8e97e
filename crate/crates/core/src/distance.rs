//! Plan-to-plan distances over actions, causal links and state sequences,
//! and the min/max/average set-quality aggregators built on them.
//!
//! All distances are exact rationals in `[0, 1]`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{big, jaccard_distance, parse_decimal};
use crate::pddl::{ActionId, GroundProblem};
use crate::plan::{extract_causal_links, simulate, CausalLinkSet, Plan, PlanError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("set quality needs at least two plans, got {0}")]
    TooFewPlans(usize),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    Action,
    #[serde(rename = "clink")]
    CausalLink,
    StatePad,
    StateHold,
}

impl DistanceMetric {
    pub const ALL: [DistanceMetric; 4] =
        [DistanceMetric::Action, DistanceMetric::CausalLink, DistanceMetric::StatePad, DistanceMetric::StateHold];

    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::Action => "action",
            DistanceMetric::CausalLink => "clink",
            DistanceMetric::StatePad => "state-pad",
            DistanceMetric::StateHold => "state-hold",
        }
    }

    pub fn between(self, a: &PlanFeatures, b: &PlanFeatures) -> BigRational {
        match self {
            DistanceMetric::Action => set_distance(&a.actions, &b.actions),
            DistanceMetric::CausalLink => set_distance(&a.links, &b.links),
            DistanceMetric::StatePad => state_distance(&a.trajectory, &b.trajectory, Tail::Pad),
            DistanceMetric::StateHold => state_distance(&a.trajectory, &b.trajectory, Tail::Hold),
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DistanceMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}` (expected action|clink|state-pad|state-hold)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Min,
    Max,
    Avg,
}

/// The three base-level feature sets of a validated plan.
#[derive(Debug, Clone)]
pub struct PlanFeatures {
    pub actions: BTreeSet<ActionId>,
    pub links: CausalLinkSet,
    pub trajectory: Trajectory,
}

impl PlanFeatures {
    pub fn extract(problem: &GroundProblem, plan: &Plan) -> Result<Self, PlanError> {
        Ok(PlanFeatures {
            actions: plan.action_set(),
            links: extract_causal_links(problem, plan)?,
            trajectory: simulate(problem, plan)?,
        })
    }
}

fn set_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> BigRational {
    let inter = a.intersection(b).count();
    jaccard_distance(inter, a.len() + b.len() - inter)
}

/// `Δ(s, s') = 1 - |s ∩ s'| / |s ∪ s'|`, with `Δ(∅, ∅) = 0`.
pub fn state_delta(s: &FixedBitSet, t: &FixedBitSet) -> BigRational {
    jaccard_distance(s.intersection_count(t), s.union_count(t))
}

#[derive(Clone, Copy)]
enum Tail {
    /// Unmatched states of the longer plan count as maximally different.
    Pad,
    /// The shorter plan stays in its final state.
    Hold,
}

fn state_distance(a: &Trajectory, b: &Trajectory, tail: Tail) -> BigRational {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let k = long.len() - 1;
    let k_short = short.len() - 1;
    if k == 0 {
        return BigRational::zero();
    }
    let mut sum = BigRational::zero();
    for i in 1..=k_short {
        sum += state_delta(&long.states[i], &short.states[i]);
    }
    match tail {
        Tail::Pad => sum += BigRational::from_integer(BigInt::from(k - k_short)),
        Tail::Hold => {
            let last = &short.states[k_short];
            for i in (k_short + 1)..=k {
                sum += state_delta(&long.states[i], last);
            }
        }
    }
    sum / BigRational::from_integer(BigInt::from(k))
}

/// `δ_A`: Jaccard distance of the plans' action sets.
pub fn action_distance(p: &Plan, q: &Plan) -> BigRational {
    set_distance(&p.action_set(), &q.action_set())
}

/// `δ_CL`: Jaccard distance of the causal-link sets.
pub fn causal_link_distance(problem: &GroundProblem, p: &Plan, q: &Plan) -> Result<BigRational, PlanError> {
    Ok(set_distance(&extract_causal_links(problem, p)?, &extract_causal_links(problem, q)?))
}

/// State-sequence distance where the longer plan's extra states each count 1.
pub fn state_distance_pad(problem: &GroundProblem, p: &Plan, q: &Plan) -> Result<BigRational, PlanError> {
    Ok(state_distance(&simulate(problem, p)?, &simulate(problem, q)?, Tail::Pad))
}

/// State-sequence distance where the shorter plan idles in its goal state.
pub fn state_distance_hold(problem: &GroundProblem, p: &Plan, q: &Plan) -> Result<BigRational, PlanError> {
    Ok(state_distance(&simulate(problem, p)?, &simulate(problem, q)?, Tail::Hold))
}

/// Min, max or average of `metric` over all unordered pairs.
pub fn set_quality(plans: &[PlanFeatures], metric: DistanceMetric, agg: Aggregate) -> Result<BigRational, DistanceError> {
    if plans.len() < 2 {
        return Err(DistanceError::TooFewPlans(plans.len()));
    }
    let mut values = Vec::with_capacity(plans.len() * (plans.len() - 1) / 2);
    for i in 0..plans.len() {
        for j in (i + 1)..plans.len() {
            values.push(metric.between(&plans[i], &plans[j]));
        }
    }
    Ok(match agg {
        Aggregate::Min => values.into_iter().min().expect("at least one pair"),
        Aggregate::Max => values.into_iter().max().expect("at least one pair"),
        Aggregate::Avg => {
            let n = values.len();
            values.into_iter().fold(BigRational::zero(), |acc, v| acc + v) / BigRational::from_integer(n.into())
        }
    })
}

/// The two one-sided parts of the action distance:
/// `|A(p) - A(q)| / |A(p) ∪ A(q)|` and `|A(q) - A(p)| / |A(p) ∪ A(q)|`.
/// They sum to `action_distance(p, q)`.
pub fn one_sided_action_terms(p: &Plan, q: &Plan) -> (BigRational, BigRational) {
    let a = p.action_set();
    let b = q.action_set();
    let union = a.union(&b).count();
    if union == 0 {
        return (BigRational::zero(), BigRational::zero());
    }
    let u = BigInt::from(union);
    (
        BigRational::new(BigInt::from(a.difference(&b).count()), u.clone()),
        BigRational::new(BigInt::from(b.difference(&a).count()), u),
    )
}

/// Exact rational for a user-supplied threshold such as `0.1`, read through
/// its decimal rendering so that `0.1` means one tenth.
pub fn threshold(d: f64) -> BigRational {
    parse_decimal(&format!("{d}"))
        .map(|q| big(&q))
        .or_else(|| BigRational::from_float(d))
        .unwrap_or_else(BigRational::one)
}

/// Both one-sided action-distance terms must reach `d / γ`.
pub fn gamma_balanced(p: &Plan, q: &Plan, d: f64, gamma: u32) -> bool {
    assert!(gamma >= 1, "gamma must be at least 1");
    let bound = threshold(d) / BigRational::from_integer(BigInt::from(gamma));
    let (ab, ba) = one_sided_action_terms(p, q);
    ab >= bound && ba >= bound
}

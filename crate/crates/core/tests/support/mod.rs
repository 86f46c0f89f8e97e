//! Strategies and checks shared by the property tests and the acceptance
//! suite.
#![allow(dead_code)]

use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::TestCaseError;

use planset::distance::{action_distance, one_sided_action_terms, set_quality};
use planset::icp::{icp, lower_convex_hull, value};
use planset::pddl::{parse_domain, parse_problem, ActionId};
use planset::plan::simulate;
use planset::search::adaptive_alpha_d;
use planset::{Aggregate, DistanceMetric, GroundProblem, Plan, PlanFeatures, TimeCostPoint, WeightDistribution};

pub const CASES: u32 = 1000;

const FLAGS_DOMAIN: &str = "
(define (domain flags)
  (:requirements :strips :typing)
  (:types flag)
  (:predicates (ok) (on ?f - flag))
  (:action set :parameters (?f - flag) :precondition (ok) :effect (on ?f))
  (:action clear :parameters (?f - flag) :precondition (on ?f) :effect (not (on ?f)))
  (:action pass :parameters (?f ?g - flag) :precondition (on ?f) :effect (and (on ?g) (not (on ?f)))))";

const FLAGS_PROBLEM: &str = "
(define (problem flags-4) (:domain flags)
  (:objects a b c d - flag)
  (:init (ok) (on a))
  (:goal (ok)))";

/// Four flags that can be set, cleared or passed on; every state reaches the goal.
pub fn flags() -> GroundProblem {
    parse_problem(FLAGS_PROBLEM, &parse_domain(FLAGS_DOMAIN).unwrap()).unwrap()
}

/// The applicable subsequence of `picks`, read as action indices.
pub fn valid_plan(problem: &GroundProblem, picks: &[u32]) -> Plan {
    let n = problem.actions.len() as u32;
    let mut steps = Vec::new();
    for &pick in picks {
        steps.push(ActionId(pick % n));
        if simulate(problem, &Plan::new(steps.clone())).is_err() {
            steps.pop();
        }
    }
    Plan::new(steps)
}

fn features(problem: &GroundProblem, picks: &[Vec<u32>]) -> Vec<PlanFeatures> {
    picks.iter().map(|s| PlanFeatures::extract(problem, &valid_plan(problem, s)).unwrap()).collect()
}

pub fn points(max: usize) -> impl Strategy<Value = Vec<TimeCostPoint>> {
    prop::collection::vec((1i64..=100, 1i64..=100), 1..=max)
        .prop_map(|v| v.into_iter().map(|(t, c)| TimeCostPoint::new(t, c)).collect())
}

pub fn dists() -> impl Strategy<Value = WeightDistribution> {
    prop_oneof![
        Just(WeightDistribution::Uniform),
        Just(WeightDistribution::triangular(0.2).unwrap()),
        Just(WeightDistribution::triangular(0.8).unwrap()),
    ]
}

pub fn picks() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(any::<u32>(), 0..10)
}

pub fn shifts() -> impl Strategy<Value = Vec<(Index, i64, i64)>> {
    prop::collection::vec((any::<Index>(), 0i64..=20, 0i64..=20), 1..12)
}

pub fn check_monotone(set: Vec<TimeCostPoint>, extra: Vec<TimeCostPoint>, dist: WeightDistribution) -> Result<(), TestCaseError> {
    let mut bigger = set.clone();
    bigger.push(extra[0]);
    prop_assert!(icp(&bigger, &dist) <= icp(&set, &dist) + 1e-9);
    Ok(())
}

/// Every point of the second set is `base` shifted up or right, so each is
/// dominated by some base point.
pub fn check_dominance(base: Vec<TimeCostPoint>, shifts: Vec<(Index, i64, i64)>, dist: WeightDistribution) -> Result<(), TestCaseError> {
    let worse: Vec<TimeCostPoint> = shifts
        .iter()
        .map(|(i, dt, dc)| {
            let p = base[i.index(base.len())];
            let (dt, dc) = if *dt == 0 && *dc == 0 { (1, 0) } else { (*dt, *dc) };
            TimeCostPoint::new(p.time + dt, p.cost + dc)
        })
        .collect();
    prop_assert!(icp(&base, &dist) < icp(&worse, &dist));
    Ok(())
}

/// Adds a point on a chord between two hull vertices, then lifts it up and
/// right: it is dominated or lies above the hull.
pub fn check_invariance(
    set: Vec<TimeCostPoint>,
    pick: (Index, Index),
    lift: (i64, i64, i64),
    dist: WeightDistribution,
) -> Result<(), TestCaseError> {
    let hull = lower_convex_hull(&set).hull;
    let a = set[hull[pick.0.index(hull.len())]];
    let b = set[hull[pick.1.index(hull.len())]];
    let frac = Rational64::new(lift.2, 4);
    let rest = Rational64::one() - frac;
    let extra = TimeCostPoint::new(a.time * frac + b.time * rest + lift.0, a.cost * frac + b.cost * rest + lift.1);
    let mut bigger = set.clone();
    bigger.push(extra);
    prop_assert!((icp(&bigger, &dist) - icp(&set, &dist)).abs() <= 1e-12);
    Ok(())
}

pub fn check_hull_minimiser(set: Vec<TimeCostPoint>, ws: Vec<f64>) -> Result<(), TestCaseError> {
    let hull = lower_convex_hull(&set);
    for w in ws {
        let best = set.iter().map(|p| value(p, w)).fold(f64::INFINITY, f64::min);
        let chosen = hull.optimal_at(w).unwrap();
        prop_assert!(hull.hull.contains(&chosen));
        prop_assert!((value(&set[chosen], w) - best).abs() <= 1e-9);
    }
    Ok(())
}

pub fn check_distance_axioms(a: Vec<u32>, b: Vec<u32>) -> Result<(), TestCaseError> {
    let problem = flags();
    let f = features(&problem, &[a, b]);
    for m in DistanceMetric::ALL {
        let d = m.between(&f[0], &f[1]);
        prop_assert_eq!(&d, &m.between(&f[1], &f[0]), "{} not symmetric", m);
        prop_assert!(d >= BigRational::zero() && d <= BigRational::one());
        prop_assert!(m.between(&f[0], &f[0]).is_zero());
    }
    Ok(())
}

pub fn check_decomposition(a: Vec<u32>, b: Vec<u32>) -> Result<(), TestCaseError> {
    let problem = flags();
    let (p, q) = (valid_plan(&problem, &a), valid_plan(&problem, &b));
    let (ab, ba) = one_sided_action_terms(&p, &q);
    prop_assert_eq!(ab + ba, action_distance(&p, &q));
    Ok(())
}

pub fn check_zeta_order(sets: Vec<Vec<u32>>, metric: usize) -> Result<(), TestCaseError> {
    let f = features(&flags(), &sets);
    let m = DistanceMetric::ALL[metric];
    let min = set_quality(&f, m, Aggregate::Min).unwrap();
    let avg = set_quality(&f, m, Aggregate::Avg).unwrap();
    let max = set_quality(&f, m, Aggregate::Max).unwrap();
    prop_assert!(min <= avg && avg <= max);
    Ok(())
}

pub fn check_duplicate_zeroes_min(sets: Vec<Vec<u32>>, metric: usize) -> Result<(), TestCaseError> {
    let mut f = features(&flags(), &sets);
    let m = DistanceMetric::ALL[metric];
    let before = set_quality(&f, m, Aggregate::Min).unwrap();
    f.push(f[0].clone());
    let after = set_quality(&f, m, Aggregate::Min).unwrap();
    prop_assert!(after.is_zero() && after <= before);
    Ok(())
}

pub fn check_alpha_d(d: f64, delta: f64, n: usize, k: usize) -> Result<(), TestCaseError> {
    let now = adaptive_alpha_d(d, delta, n, k);
    prop_assert!(adaptive_alpha_d(d, delta, n + 1, k) >= now);
    prop_assert!((0.0..=1.0).contains(&now));
    Ok(())
}

//! Plans, their simulation, and the features derived from them: the state
//! trajectory, the causal-link structure and the (makespan, cost) point.

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{to_json_number, Quantity};
use crate::pddl::{ActionId, AtomId, GroundAction, GroundProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("step {step} refers to unknown action id {id}")]
    UnknownAction { step: usize, id: u32 },
    #[error("step {step} `{action}` is not applicable; missing {missing:?}")]
    PreconditionViolation { step: usize, action: String, missing: Vec<String> },
    #[error("plan does not reach the goal; missing {missing:?}")]
    GoalUnsatisfied { missing: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    pub steps: Vec<ActionId>,
    pub provenance: Option<Provenance>,
}

impl Plan {
    pub fn new(steps: Vec<ActionId>) -> Self {
        Plan { steps, provenance: None }
    }

    pub fn with_provenance(mut self, generator: impl Into<String>, seed: u64) -> Self {
        self.provenance = Some(Provenance { generator: generator.into(), seed });
        self
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The set `A(p)` of distinct actions.
    pub fn action_set(&self) -> BTreeSet<ActionId> {
        self.steps.iter().copied().collect()
    }

    /// Same step sequence, ignoring provenance.
    pub fn same_steps(&self, other: &Plan) -> bool {
        self.steps == other.steps
    }

    pub fn step_names<'p>(&self, problem: &'p GroundProblem) -> Vec<&'p str> {
        self.steps.iter().map(|a| problem.action(*a).name.as_str()).collect()
    }
}

/// States `s_0 .. s_n` visited by a plan of `n` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<FixedBitSet>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &FixedBitSet {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkEnd {
    Init,
    Action(ActionId),
    Goal,
}

/// `producer --atom--> consumer`, identified by action rather than step
/// position so links can be compared across plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalLink {
    pub producer: LinkEnd,
    pub atom: AtomId,
    pub consumer: LinkEnd,
}

pub type CausalLinkSet = BTreeSet<CausalLink>;

/// A causal link anchored at step positions (`None` = INIT / GOAL).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepLink {
    pub producer: Option<usize>,
    pub atom: AtomId,
    pub consumer: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeCostPoint {
    pub time: Quantity,
    pub cost: Quantity,
}

impl TimeCostPoint {
    pub fn new(time: impl Into<Quantity>, cost: impl Into<Quantity>) -> Self {
        TimeCostPoint { time: time.into(), cost: cost.into() }
    }

    /// `a` dominates `b`: no worse in both coordinates, strictly better in one.
    pub fn dominates(&self, other: &TimeCostPoint) -> bool {
        self.time <= other.time && self.cost <= other.cost && (self.time < other.time || self.cost < other.cost)
    }
}

impl fmt::Display for TimeCostPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.time, self.cost)
    }
}

impl Serialize for TimeCostPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TimeCostPoint", 2)?;
        st.serialize_field("time", &to_json_number(&self.time))?;
        st.serialize_field("cost", &to_json_number(&self.cost))?;
        st.end()
    }
}

fn resolve<'p>(problem: &'p GroundProblem, plan: &Plan) -> Result<Vec<&'p GroundAction>, PlanError> {
    plan.steps
        .iter()
        .enumerate()
        .map(|(step, id)| {
            problem.actions.get(id.index()).ok_or(PlanError::UnknownAction { step, id: id.0 })
        })
        .collect()
}

fn missing_names(problem: &GroundProblem, state: &FixedBitSet, atoms: &[AtomId]) -> Vec<String> {
    atoms.iter().filter(|a| !state.contains(a.index())).map(|a| problem.atom_name(*a).to_string()).collect()
}

pub(crate) fn apply(state: &mut FixedBitSet, action: &GroundAction) {
    for d in &action.delete {
        state.set(d.index(), false);
    }
    for a in &action.add {
        state.insert(a.index());
    }
}

pub(crate) fn applicable(state: &FixedBitSet, action: &GroundAction) -> bool {
    action.pre.iter().all(|p| state.contains(p.index()))
}

/// Executes `plan` from the initial state; fails on the first inapplicable
/// step or if the final state misses a goal.
pub fn simulate(problem: &GroundProblem, plan: &Plan) -> Result<Trajectory, PlanError> {
    let actions = resolve(problem, plan)?;
    let mut state = problem.init_state();
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(state.clone());
    for (step, action) in actions.iter().enumerate() {
        if !applicable(&state, action) {
            return Err(PlanError::PreconditionViolation {
                step,
                action: action.name.clone(),
                missing: missing_names(problem, &state, &action.pre),
            });
        }
        apply(&mut state, action);
        states.push(state.clone());
    }
    let missing = missing_names(problem, &state, &problem.goals);
    if !missing.is_empty() {
        return Err(PlanError::GoalUnsatisfied { missing });
    }
    Ok(Trajectory { states })
}

/// Causal links by step position. Each precondition (and each goal) is
/// supported by the latest earlier step that added the atom, or by INIT.
pub fn causal_link_steps(problem: &GroundProblem, plan: &Plan) -> Result<Vec<StepLink>, PlanError> {
    simulate(problem, plan)?;
    let actions = resolve(problem, plan)?;
    // Some(None) = supported by INIT, Some(Some(i)) = by step i, None = false.
    let mut provider: Vec<Option<Option<usize>>> = vec![None; problem.atom_count()];
    for a in &problem.init {
        provider[a.index()] = Some(None);
    }
    let mut links = Vec::new();
    for (step, action) in actions.iter().enumerate() {
        for p in &action.pre {
            let producer = provider[p.index()].expect("simulation guarantees support");
            links.push(StepLink { producer, atom: *p, consumer: Some(step) });
        }
        for d in &action.delete {
            provider[d.index()] = None;
        }
        for a in &action.add {
            provider[a.index()] = Some(Some(step));
        }
    }
    for g in &problem.goals {
        let producer = provider[g.index()].expect("simulation guarantees goals");
        links.push(StepLink { producer, atom: *g, consumer: None });
    }
    Ok(links)
}

/// The causal-link set `C(p)`, including INIT and GOAL links.
pub fn extract_causal_links(problem: &GroundProblem, plan: &Plan) -> Result<CausalLinkSet, PlanError> {
    let end = |pos: Option<usize>, terminal: LinkEnd| match pos {
        Some(i) => LinkEnd::Action(plan.steps[i]),
        None => terminal,
    };
    Ok(causal_link_steps(problem, plan)?
        .into_iter()
        .map(|l| CausalLink {
            producer: end(l.producer, LinkEnd::Init),
            atom: l.atom,
            consumer: end(l.consumer, LinkEnd::Goal),
        })
        .collect())
}

fn intersects(a: &[AtomId], b: &[AtomId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Precedence edge between an earlier step `a` and a later step `b`: causal
/// support, or either one deleting something the other needs or adds.
pub fn must_precede(a: &GroundAction, b: &GroundAction) -> bool {
    intersects(&a.add, &b.pre)
        || intersects(&a.delete, &b.pre)
        || intersects(&a.delete, &b.add)
        || intersects(&b.delete, &a.pre)
        || intersects(&b.delete, &a.add)
}

/// Finish time of every step in the deordered plan.
pub fn finish_times(problem: &GroundProblem, steps: &[ActionId]) -> Vec<Quantity> {
    let mut finish: Vec<Quantity> = Vec::with_capacity(steps.len());
    for (j, id) in steps.iter().enumerate() {
        let b = problem.action(*id);
        let start = (0..j)
            .filter(|&i| must_precede(problem.action(steps[i]), b))
            .map(|i| finish[i])
            .max()
            .unwrap_or_else(Quantity::zero);
        finish.push(start + b.duration);
    }
    finish
}

/// (makespan, total cost). Makespan is the longest duration-weighted path
/// through the precedence graph.
pub fn project(problem: &GroundProblem, plan: &Plan) -> Result<TimeCostPoint, PlanError> {
    simulate(problem, plan)?;
    let cost = plan.steps.iter().map(|a| problem.action(*a).cost).sum();
    let time = finish_times(problem, &plan.steps).into_iter().max().unwrap_or_else(Quantity::zero);
    Ok(TimeCostPoint { time, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    fn task(domain: &str, problem: &str) -> GroundProblem {
        let d = parse_domain(domain).unwrap();
        parse_problem(problem, &d).unwrap()
    }

    fn plan(p: &GroundProblem, names: &[&str]) -> Plan {
        Plan::new(names.iter().map(|n| p.action_id(n).unwrap_or_else(|| panic!("{n}"))).collect())
    }

    fn three_plans() -> GroundProblem {
        task(include_str!("../fixtures/three-plans-domain.pddl"), include_str!("../fixtures/three-plans-problem.pddl"))
    }

    #[test]
    fn empty_plan_when_goals_hold_initially() {
        let p = task(
            "(define (domain d) (:predicates (g)) (:action a :parameters () :precondition (g) :effect (g)))",
            "(define (problem p) (:domain d) (:init (g)) (:goal (g)))",
        );
        let t = simulate(&p, &Plan::new(vec![])).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(project(&p, &Plan::new(vec![])).unwrap(), TimeCostPoint::new(0, 0));
    }

    #[test]
    fn three_plans_plan_simulates() {
        let p = three_plans();
        let t = simulate(&p, &plan(&p, &["a1", "a2", "a3"])).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.states[0], p.init_state());
    }

    #[test]
    fn deleted_precondition_is_reported_at_its_step() {
        let p = three_plans();
        // a5 deletes r1, so a1 can no longer run.
        let err = simulate(&p, &plan(&p, &["a5", "a1"])).unwrap_err();
        assert_eq!(
            err,
            PlanError::PreconditionViolation { step: 1, action: "(a1)".into(), missing: vec!["(r1)".into()] }
        );
        let err = simulate(&p, &plan(&p, &["a1"])).unwrap_err();
        assert!(matches!(err, PlanError::GoalUnsatisfied { .. }));
    }

    #[test]
    fn three_plans_links_of_p2() {
        let p = three_plans();
        let links = extract_causal_links(&p, &plan(&p, &["a1", "a2", "a4"])).unwrap();
        let a4 = p.action_id("a4").unwrap();
        let r1 = p.atom("r1").unwrap();
        let r4 = p.atom("r4").unwrap();
        assert!(links.contains(&CausalLink { producer: LinkEnd::Init, atom: r1, consumer: LinkEnd::Action(a4) }));
        assert!(links.contains(&CausalLink { producer: LinkEnd::Action(a4), atom: r4, consumer: LinkEnd::Goal }));
        assert_eq!(links.len(), 5);
    }

    #[test]
    fn init_only_consumer_links_to_init() {
        let p = three_plans();
        let links = causal_link_steps(&p, &plan(&p, &["a5", "a6"])).unwrap();
        assert_eq!(links[0], StepLink { producer: None, atom: p.atom("r1").unwrap(), consumer: Some(0) });
    }

    #[test]
    fn latest_adder_supplies_the_link() {
        // Both `make` and `remake` add (x); `use` consumes it.
        let p = task(
            "(define (domain d) (:predicates (s) (x) (g))
              (:action make :parameters () :precondition (s) :effect (x))
              (:action remake :parameters () :precondition (s) :effect (x))
              (:action use :parameters () :precondition (x) :effect (g)))",
            "(define (problem p) (:domain d) (:init (s)) (:goal (g)))",
        );
        let pl = plan(&p, &["make", "remake", "use"]);
        let links = causal_link_steps(&p, &pl).unwrap();
        let x = p.atom("x").unwrap();
        let support: Vec<_> = links.iter().filter(|l| l.atom == x).collect();
        // Earliest-adder would say step 0; the documented convention is step 1.
        assert_eq!(support.len(), 1);
        assert_eq!(support[0].producer, Some(1));
        assert_eq!(support[0].consumer, Some(2));
    }

    const PARALLEL: &str = "(define (domain par) (:requirements :strips :action-costs)
        (:predicates (s) (a) (b) (c) (d))
        (:functions (total-cost) - number)
        (:action one :parameters () :precondition (s) :effect (and (a) (increase (total-cost) 2)))
        (:action two :parameters () :precondition (a) :effect (and (b) (increase (total-cost) 3)))
        (:action three :parameters () :precondition (b) :effect (and (c) (increase (total-cost) 4)))
        (:action left :parameters () :precondition () :effect (and (c)))
        (:action right :parameters () :precondition () :effect (and (d))))";

    #[test]
    fn chain_makespan_and_cost() {
        let p = task(PARALLEL, "(define (problem p) (:domain par) (:init (s)) (:goal (c)))");
        let pt = project(&p, &plan(&p, &["one", "two", "three"])).unwrap();
        assert_eq!(pt, TimeCostPoint::new(3, 9));
    }

    #[test]
    fn independent_actions_overlap() {
        let p = task(PARALLEL, "(define (problem p) (:domain par) (:init (s)) (:goal (and (c) (d))))");
        let p = crate::pddl::load_durations(p, r#"{"left": 5, "right": 7}"#).unwrap().problem;
        let pl = plan(&p, &["left", "right"]);
        // No shared atoms, so the precedence graph has no edges: longest path = max(5, 7).
        assert!(!must_precede(p.action(pl.steps[0]), p.action(pl.steps[1])));
        assert_eq!(project(&p, &pl).unwrap().time, Quantity::from_integer(7));
    }

    #[test]
    fn domination_requires_one_strict_coordinate() {
        let a = TimeCostPoint::new(7, 15);
        assert!(a.dominates(&TimeCostPoint::new(8, 20)));
        assert!(a.dominates(&TimeCostPoint::new(7, 16)));
        assert!(!a.dominates(&a));
        assert!(!a.dominates(&TimeCostPoint::new(6, 22)));
    }
}

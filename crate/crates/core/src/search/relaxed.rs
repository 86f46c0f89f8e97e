use std::cmp::Ordering;
use std::collections::BinaryHeap;

use fixedbitset::FixedBitSet;

use crate::exact::to_f64;
use crate::pddl::{ActionId, AtomId, GroundProblem};

/// A delete-relaxed completion of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedPlan {
    /// Selected actions in a valid relaxed order.
    pub actions: Vec<ActionId>,
    /// Sum of the actions' real costs.
    pub cost: f64,
    /// Earliest time at which every goal holds, never below the prefix makespan.
    pub makespan: f64,
}

impl RelaxedPlan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Per-call knobs for [`Relaxation::plan`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RelaxedOptions<'a> {
    /// Supporter-selection weight per action; real cost when absent.
    pub weights: Option<&'a [f64]>,
    /// Actions carrying a unit penalty.
    pub penalty: Option<&'a FixedBitSet>,
    /// Time at which each atom of the state became true.
    pub atom_times: Option<&'a [f64]>,
    pub prefix_makespan: f64,
}

/// Precomputed precondition index for repeated relaxed-plan queries.
#[derive(Debug, Clone)]
pub struct Relaxation {
    consumers: Vec<Vec<ActionId>>,
    no_pre: Vec<ActionId>,
    costs: Vec<f64>,
    durations: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Relaxation {
    pub fn new(problem: &GroundProblem) -> Self {
        let mut consumers = vec![Vec::new(); problem.atom_count()];
        let mut no_pre = Vec::new();
        for (i, a) in problem.actions.iter().enumerate() {
            let id = ActionId(i as u32);
            if a.pre.is_empty() {
                no_pre.push(id);
            }
            for p in &a.pre {
                consumers[p.index()].push(id);
            }
        }
        Relaxation {
            consumers,
            no_pre,
            costs: problem.actions.iter().map(|a| to_f64(&a.cost)).collect(),
            durations: problem.actions.iter().map(|a| to_f64(&a.duration)).collect(),
        }
    }

    /// Additive-cost best supporters, then backchaining from the goals.
    /// Returns `None` when some goal is unreachable even without deletes.
    pub fn plan(
        &self,
        problem: &GroundProblem,
        state: &FixedBitSet,
        goals: &[AtomId],
        opts: &RelaxedOptions<'_>,
    ) -> Option<RelaxedPlan> {
        let n_atoms = problem.atom_count();
        let n_actions = problem.actions.len();
        let mut h = vec![f64::INFINITY; n_atoms];
        let mut done = FixedBitSet::with_capacity(n_atoms);
        let mut best: Vec<Option<ActionId>> = vec![None; n_atoms];
        let mut remaining: Vec<usize> = problem.actions.iter().map(|a| a.pre.len()).collect();
        let mut sum = vec![0.0f64; n_actions];
        let mut order = vec![u32::MAX; n_actions];
        let mut next_order = 0u32;
        let mut heap = BinaryHeap::new();

        let weight = |a: ActionId| {
            let base = opts.weights.map_or(self.costs[a.index()], |w| w[a.index()]);
            let pen = opts.penalty.map_or(0.0, |p| if p.contains(a.index()) { 1.0 } else { 0.0 });
            base + pen
        };
        let mut trigger = |a: ActionId,
                           sum: &[f64],
                           h: &mut Vec<f64>,
                           best: &mut Vec<Option<ActionId>>,
                           done: &FixedBitSet,
                           heap: &mut BinaryHeap<Entry>| {
            order[a.index()] = next_order;
            next_order += 1;
            let c = sum[a.index()] + weight(a);
            for y in &problem.actions[a.index()].add {
                if !done.contains(y.index()) && c < h[y.index()] {
                    h[y.index()] = c;
                    best[y.index()] = Some(a);
                    heap.push(Entry(c, y.0));
                }
            }
        };

        for x in state.ones() {
            h[x] = 0.0;
            heap.push(Entry(0.0, x as u32));
        }
        for &a in &self.no_pre {
            trigger(a, &sum, &mut h, &mut best, &done, &mut heap);
        }
        let mut open_goals = goals.iter().filter(|g| !state.contains(g.index())).count();
        while let Some(Entry(c, x)) = heap.pop() {
            let xi = x as usize;
            if done.contains(xi) || c > h[xi] {
                continue;
            }
            done.insert(xi);
            if !state.contains(xi) && goals.iter().any(|g| g.index() == xi) {
                open_goals -= 1;
                if open_goals == 0 {
                    break;
                }
            }
            for &a in &self.consumers[xi] {
                sum[a.index()] += c;
                remaining[a.index()] -= 1;
                if remaining[a.index()] == 0 {
                    trigger(a, &sum, &mut h, &mut best, &done, &mut heap);
                }
            }
        }
        if open_goals > 0 {
            return None;
        }

        let mut selected = FixedBitSet::with_capacity(n_actions);
        let mut handled = FixedBitSet::with_capacity(n_atoms);
        let mut stack: Vec<AtomId> = goals.to_vec();
        while let Some(g) = stack.pop() {
            if state.contains(g.index()) || handled.put(g.index()) {
                continue;
            }
            let a = best[g.index()].expect("reached atoms have a supporter");
            if !selected.put(a.index()) {
                stack.extend(problem.actions[a.index()].pre.iter().copied());
            }
        }
        let mut actions: Vec<ActionId> = selected.ones().map(|i| ActionId(i as u32)).collect();
        actions.sort_by_key(|a| order[a.index()]);

        let mut finish = vec![0.0f64; n_actions];
        let atom_time = |x: AtomId, finish: &[f64]| -> f64 {
            if state.contains(x.index()) {
                opts.atom_times.map_or(0.0, |t| t[x.index()])
            } else {
                finish[best[x.index()].expect("supported").index()]
            }
        };
        for &a in &actions {
            let start = problem.actions[a.index()].pre.iter().map(|p| atom_time(*p, &finish)).fold(0.0, f64::max);
            finish[a.index()] = start + self.durations[a.index()];
        }
        let makespan = goals.iter().map(|g| atom_time(*g, &finish)).fold(opts.prefix_makespan, f64::max);
        let cost = actions.iter().map(|a| self.costs[a.index()]).sum();
        Some(RelaxedPlan { actions, cost, makespan })
    }
}

/// One-off relaxed plan from `state` using real costs plus the given penalty.
pub fn relaxed_plan(
    problem: &GroundProblem,
    state: &FixedBitSet,
    goals: &[AtomId],
    penalty: impl Fn(ActionId) -> bool,
) -> Option<RelaxedPlan> {
    let mut marks = FixedBitSet::with_capacity(problem.actions.len());
    for id in problem.action_ids() {
        if penalty(id) {
            marks.insert(id.index());
        }
    }
    Relaxation::new(problem).plan(problem, state, goals, &RelaxedOptions { penalty: Some(&marks), ..Default::default() })
}

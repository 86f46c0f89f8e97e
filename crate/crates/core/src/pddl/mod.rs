//! Reading the STRIPS + `:typing` + `:action-costs` subset of PDDL, grounding
//! it, attaching durations from a JSON sidecar, and reading/writing plan files.

mod domain;
mod durations;
mod ground;
mod planfile;
pub mod sexpr;

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::exact::Quantity;

pub use domain::parse_domain;
pub use durations::{load_durations, DurationsOutcome};
pub use ground::parse_problem;
pub use planfile::{read_plan_file, read_plan_set_file, PlanFile, PlanFileEntry, PlanSetFile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported requirement `{0}`")]
    UnsupportedRequirement(String),
    #[error("unsupported construct at {line}:{col}: {what}")]
    Unsupported { line: usize, col: usize, what: String },
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
    #[error("undeclared object `{0}`")]
    UndeclaredObject(String),
    #[error("variable `{var}` is not a parameter of action `{action}`")]
    UnboundVariable { action: String, var: String },
    #[error("undeclared type `{0}`")]
    UndeclaredType(String),
    #[error("predicate `{name}` expects {expected} arguments, got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("problem is for domain `{found}` but domain `{expected}` was given")]
    DomainMismatch { expected: String, found: String },
    #[error("problem has an empty goal")]
    EmptyGoal,
    #[error("invalid action cost in `{action}`: {message}")]
    InvalidCost { action: String, message: String },
    #[error("action `{action}` both adds and deletes `{atom}`")]
    ContradictoryEffect { action: String, atom: String },
    #[error("duration for `{name}` must be a positive number, got {value}")]
    InvalidDuration { name: String, value: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("plan file states {field} = {stated} but the plan evaluates to {actual}")]
    StatedValueMismatch { field: &'static str, stated: String, actual: String },
    #[error(transparent)]
    Plan(#[from] crate::plan::PlanError),
}

impl PddlError {
    pub(crate) fn syntax(pos: sexpr::Pos, message: impl Into<String>) -> Self {
        PddlError::Syntax { line: pos.line, col: pos.col, message: message.into() }
    }

    pub(crate) fn unsupported(pos: sexpr::Pos, what: impl Into<String>) -> Self {
        PddlError::Unsupported { line: pos.line, col: pos.col, what: what.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Requirement {
    Strips,
    Typing,
    ActionCosts,
}

impl Requirement {
    pub fn keyword(self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::ActionCosts => ":action-costs",
        }
    }
}

/// A name with its declared type (`object` when untyped).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A lifted action. `cost` comes from `(increase (total-cost) N)`;
/// `duration` is always 1 in a parsed domain and is set from the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub preconditions: Vec<AtomTemplate>,
    pub add_effects: Vec<AtomTemplate>,
    pub delete_effects: Vec<AtomTemplate>,
    #[serde(serialize_with = "ser_quantity")]
    pub cost: Quantity,
    #[serde(serialize_with = "ser_quantity")]
    pub duration: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainDescription {
    pub name: String,
    pub requirements: Vec<Requirement>,
    /// Declared types with their parent (`object` for roots).
    pub types: Vec<TypedName>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub total_cost: bool,
    pub actions: Vec<ActionSchema>,
}

impl DomainDescription {
    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AtomId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ActionId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A grounded action. `add` and `delete` are disjoint; atoms both added
/// and deleted by a binding keep only the add (the add wins under
/// `(s \ del) ∪ add`).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub name: String,
    pub schema: String,
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub delete: Vec<AtomId>,
    pub cost: Quantity,
    pub duration: Quantity,
}

/// A fully grounded planning task. Actions are ordered lexicographically by
/// grounded name, so `ActionId`s are stable for identical input.
#[derive(Debug, Clone)]
pub struct GroundProblem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    atoms: Vec<String>,
    atom_index: HashMap<String, AtomId>,
    pub actions: Vec<GroundAction>,
    action_index: HashMap<String, ActionId>,
    pub init: Vec<AtomId>,
    pub goals: Vec<AtomId>,
}

impl GroundProblem {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_name(&self, atom: AtomId) -> &str {
        &self.atoms[atom.index()]
    }

    pub fn atom(&self, name: &str) -> Option<AtomId> {
        self.atom_index.get(&normalize_ground_name(name)).copied()
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id.index()]
    }

    /// Looks up a grounded action by name. Accepts `(drive t a b)`,
    /// `drive t a b` and any case or spacing variant of those.
    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(&normalize_ground_name(name)).copied()
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len() as u32).map(ActionId)
    }

    pub fn init_state(&self) -> FixedBitSet {
        self.atom_set(&self.init)
    }

    pub fn goal_set(&self) -> FixedBitSet {
        self.atom_set(&self.goals)
    }

    pub fn atom_set(&self, atoms: &[AtomId]) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.atoms.len());
        for a in atoms {
            set.insert(a.index());
        }
        set
    }

    /// JSON dump of the grounded task for debugging.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let names = |ids: &[AtomId]| -> Vec<&str> { ids.iter().map(|a| self.atom_name(*a)).collect() };
        serde_json::json!({
            "problem": self.name,
            "domain": self.domain_name,
            "objects": self.objects,
            "init": names(&self.init),
            "goals": names(&self.goals),
            "actions": self.actions.iter().map(|a| serde_json::json!({
                "name": a.name,
                "schema": a.schema,
                "pre": names(&a.pre),
                "add": names(&a.add),
                "del": names(&a.delete),
                "cost": crate::exact::to_json_number(&a.cost),
                "duration": crate::exact::to_json_number(&a.duration),
            })).collect::<Vec<_>>(),
        })
    }

    pub(crate) fn from_parts(
        name: String,
        domain_name: String,
        objects: Vec<TypedName>,
        atoms: Vec<String>,
        mut actions: Vec<GroundAction>,
        init: Vec<AtomId>,
        goals: Vec<AtomId>,
    ) -> Self {
        actions.sort_by(|a, b| a.name.cmp(&b.name));
        let atom_index = atoms.iter().enumerate().map(|(i, n)| (n.clone(), AtomId(i as u32))).collect();
        let action_index =
            actions.iter().enumerate().map(|(i, a)| (a.name.clone(), ActionId(i as u32))).collect();
        GroundProblem { name, domain_name, objects, atoms, atom_index, actions, action_index, init, goals }
    }
}

/// Canonical grounded name: `(name arg ...)`, lowercase, single spaces.
pub fn normalize_ground_name(name: &str) -> String {
    let inner = name.trim();
    let inner = inner.strip_prefix('(').unwrap_or(inner);
    let inner = inner.strip_suffix(')').unwrap_or(inner);
    let parts: Vec<String> = inner.split_whitespace().map(str::to_ascii_lowercase).collect();
    format!("({})", parts.join(" "))
}

fn ser_quantity<S: serde::Serializer>(q: &Quantity, s: S) -> Result<S::Ok, S::Error> {
    crate::exact::to_json_number(q).serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_names_normalize() {
        assert_eq!(normalize_ground_name("Drive  T1 a b"), "(drive t1 a b)");
        assert_eq!(normalize_ground_name("(a1)"), "(a1)");
        assert_eq!(normalize_ground_name("a1"), "(a1)");
    }
}

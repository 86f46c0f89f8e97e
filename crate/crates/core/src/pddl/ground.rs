use std::collections::{BTreeSet, HashMap, HashSet};

use super::domain::{parse_atom, parse_typed_list};
use super::sexpr::{self, Sexpr};
use super::{
    ActionSchema, AtomId, AtomTemplate, DomainDescription, GroundAction, GroundProblem, PddlError, Term, TypedName,
};

/// Parses a problem against `domain` and grounds every schema over all
/// typed bindings. Bindings that violate a static precondition (a predicate
/// no action ever changes) are dropped since they can never be applied.
pub fn parse_problem(text: &str, domain: &DomainDescription) -> Result<GroundProblem, PddlError> {
    let root = sexpr::parse(text)?;
    let items = root.expect_list("`(define (problem ...) ...)`")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return Err(PddlError::syntax(root.pos(), "expected `(define (problem ...) ...)`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(root.pos(), "missing `(problem <name>)`"))?
        .expect_list("`(problem <name>)`")?;
    if header.len() != 2 || header[0].as_atom() != Some("problem") {
        return Err(PddlError::syntax(items[1].pos(), "expected `(problem <name>)`"));
    }
    let name = header[1].expect_atom("problem name")?.to_string();

    let mut domain_ref = None;
    let mut objects: Vec<TypedName> = domain.constants.clone();
    let mut init_atoms: Vec<AtomTemplate> = Vec::new();
    let mut goal_atoms: Vec<AtomTemplate> = Vec::new();
    let mut saw_goal = false;

    for section in &items[2..] {
        let body = section.expect_list("a problem section")?;
        match section.head() {
            Some(":domain") => {
                let d = body
                    .get(1)
                    .ok_or_else(|| PddlError::syntax(section.pos(), "missing domain name"))?
                    .expect_atom("domain name")?;
                domain_ref = Some(d.to_string());
            }
            Some(":requirements") => {}
            Some(":objects") => {
                for obj in parse_typed_list(&body[1..], false)? {
                    if !objects.iter().any(|o| o.name == obj.name) {
                        objects.push(obj);
                    }
                }
            }
            Some(":init") => {
                for fact in &body[1..] {
                    if fact.head() == Some("=") {
                        let l = fact.as_list().unwrap_or_default();
                        let is_total_cost =
                            l.len() == 3 && l[1].as_list().map(|f| f.len() == 1 && f[0].as_atom() == Some("total-cost")) == Some(true);
                        if !is_total_cost {
                            return Err(PddlError::unsupported(fact.pos(), "numeric fluents other than total-cost"));
                        }
                        continue;
                    }
                    if fact.head() == Some("not") {
                        return Err(PddlError::unsupported(fact.pos(), "negative literal in :init"));
                    }
                    init_atoms.push(parse_atom(fact)?);
                }
            }
            Some(":goal") => {
                saw_goal = true;
                let g = body.get(1).ok_or_else(|| PddlError::syntax(section.pos(), "missing goal"))?;
                collect_goal(g, &mut goal_atoms)?;
            }
            Some(":metric") => {
                let ok = body.len() == 3
                    && body[1].as_atom() == Some("minimize")
                    && body[2].as_list().map(|f| f.len() == 1 && f[0].as_atom() == Some("total-cost")) == Some(true);
                if !ok {
                    return Err(PddlError::unsupported(section.pos(), "metric other than (minimize (total-cost))"));
                }
            }
            Some(other) => return Err(PddlError::unsupported(section.pos(), format!("problem section `{other}`"))),
            None => return Err(PddlError::syntax(section.pos(), "expected a section keyword")),
        }
    }

    let domain_ref = domain_ref.ok_or_else(|| PddlError::syntax(root.pos(), "missing `(:domain ...)`"))?;
    if domain_ref != domain.name {
        return Err(PddlError::DomainMismatch { expected: domain.name.clone(), found: domain_ref });
    }
    if !saw_goal || goal_atoms.is_empty() {
        return Err(PddlError::EmptyGoal);
    }
    for o in &objects {
        if o.ty != "object" && !domain.types.iter().any(|t| t.name == o.ty || t.ty == o.ty) {
            return Err(PddlError::UndeclaredType(o.ty.clone()));
        }
    }

    Grounder::new(domain, name, objects)?.ground(&init_atoms, &goal_atoms)
}

fn collect_goal(expr: &Sexpr, out: &mut Vec<AtomTemplate>) -> Result<(), PddlError> {
    match expr.head() {
        Some("and") => {
            for e in &expr.as_list().unwrap_or_default()[1..] {
                collect_goal(e, out)?;
            }
            Ok(())
        }
        None if expr.as_list().map(<[Sexpr]>::is_empty) == Some(true) => Ok(()),
        Some(kw @ ("not" | "or" | "forall" | "exists" | "imply" | "preference")) => {
            Err(PddlError::unsupported(expr.pos(), format!("`{kw}` in goal")))
        }
        _ => {
            out.push(parse_atom(expr)?);
            Ok(())
        }
    }
}

struct Grounder<'a> {
    domain: &'a DomainDescription,
    name: String,
    objects: Vec<TypedName>,
    /// type name -> objects of that type or any subtype
    by_type: HashMap<String, Vec<String>>,
    atoms: Vec<String>,
    atom_index: HashMap<String, AtomId>,
    static_predicates: HashSet<String>,
    static_facts: HashSet<String>,
}

impl<'a> Grounder<'a> {
    fn new(domain: &'a DomainDescription, name: String, objects: Vec<TypedName>) -> Result<Self, PddlError> {
        let mut by_type: HashMap<String, Vec<String>> = HashMap::new();
        for o in &objects {
            let mut ty = o.ty.clone();
            let mut guard = 0;
            loop {
                by_type.entry(ty.clone()).or_default().push(o.name.clone());
                if ty == "object" {
                    break;
                }
                ty = domain.types.iter().find(|t| t.name == ty).map(|t| t.ty.clone()).unwrap_or_else(|| "object".into());
                guard += 1;
                if guard > domain.types.len() + 1 {
                    return Err(PddlError::UndeclaredType(format!("cyclic type hierarchy at `{ty}`")));
                }
            }
        }
        for names in by_type.values_mut() {
            names.sort();
            names.dedup();
        }
        let dynamic: HashSet<&str> = domain
            .actions
            .iter()
            .flat_map(|a| a.add_effects.iter().chain(&a.delete_effects))
            .map(|t| t.predicate.as_str())
            .collect();
        let static_predicates = domain
            .predicates
            .iter()
            .filter(|p| !dynamic.contains(p.name.as_str()))
            .map(|p| p.name.clone())
            .collect();
        Ok(Grounder {
            domain,
            name,
            objects,
            by_type,
            atoms: Vec::new(),
            atom_index: HashMap::new(),
            static_predicates,
            static_facts: HashSet::new(),
        })
    }

    fn intern(&mut self, name: String) -> AtomId {
        if let Some(id) = self.atom_index.get(&name) {
            return *id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(name.clone());
        self.atom_index.insert(name, id);
        id
    }

    fn check_fact(&self, atom: &AtomTemplate) -> Result<String, PddlError> {
        let decl = self
            .domain
            .predicates
            .iter()
            .find(|p| p.name == atom.predicate)
            .ok_or_else(|| PddlError::UndeclaredPredicate(atom.predicate.clone()))?;
        if decl.params.len() != atom.args.len() {
            return Err(PddlError::Arity {
                name: atom.predicate.clone(),
                expected: decl.params.len(),
                found: atom.args.len(),
            });
        }
        let mut parts = vec![atom.predicate.clone()];
        for arg in &atom.args {
            match arg {
                Term::Const(c) if self.objects.iter().any(|o| &o.name == c) => parts.push(c.clone()),
                other => return Err(PddlError::UndeclaredObject(other.to_string())),
            }
        }
        Ok(format!("({})", parts.join(" ")))
    }

    fn ground(mut self, init: &[AtomTemplate], goals: &[AtomTemplate]) -> Result<GroundProblem, PddlError> {
        let mut init_ids = BTreeSet::new();
        for fact in init {
            let name = self.check_fact(fact)?;
            if self.static_predicates.contains(&fact.predicate) {
                self.static_facts.insert(name.clone());
            }
            init_ids.insert(self.intern(name));
        }
        let mut goal_ids = BTreeSet::new();
        for fact in goals {
            let name = self.check_fact(fact)?;
            goal_ids.insert(self.intern(name));
        }

        let mut actions = Vec::new();
        for schema in &self.domain.actions {
            let mut binding: Vec<String> = Vec::with_capacity(schema.parameters.len());
            let mut found = Vec::new();
            self.enumerate(schema, &mut binding, &mut found);
            for b in found {
                actions.push(self.instantiate(schema, &b));
            }
        }

        let objects = self.objects.clone();
        Ok(GroundProblem::from_parts(
            self.name,
            self.domain.name.clone(),
            objects,
            self.atoms,
            actions,
            init_ids.into_iter().collect(),
            goal_ids.into_iter().collect(),
        ))
    }

    fn enumerate(&self, schema: &ActionSchema, binding: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if !self.statics_hold(schema, binding) {
            return;
        }
        if binding.len() == schema.parameters.len() {
            out.push(binding.clone());
            return;
        }
        let ty = &schema.parameters[binding.len()].ty;
        let Some(candidates) = self.by_type.get(ty) else { return };
        for obj in candidates {
            binding.push(obj.clone());
            self.enumerate(schema, binding, out);
            binding.pop();
        }
    }

    /// Checks every static precondition whose arguments are all bound.
    fn statics_hold(&self, schema: &ActionSchema, binding: &[String]) -> bool {
        schema.preconditions.iter().filter(|p| self.static_predicates.contains(&p.predicate)).all(|p| {
            match substitute(p, schema, binding) {
                Some(name) => self.static_facts.contains(&name),
                None => true,
            }
        })
    }

    fn instantiate(&mut self, schema: &ActionSchema, binding: &[String]) -> GroundAction {
        let ground = |atoms: &[AtomTemplate], this: &mut Self| -> Vec<AtomId> {
            let mut ids: Vec<AtomId> = atoms
                .iter()
                .map(|t| {
                    let n = substitute(t, schema, binding).expect("fully bound");
                    this.intern(n)
                })
                .collect();
            ids.sort();
            ids.dedup();
            ids
        };
        let pre = ground(&schema.preconditions, self);
        let add = ground(&schema.add_effects, self);
        let mut delete = ground(&schema.delete_effects, self);
        delete.retain(|d| !add.contains(d));
        let mut parts = vec![schema.name.clone()];
        parts.extend(binding.iter().cloned());
        GroundAction {
            name: format!("({})", parts.join(" ")),
            schema: schema.name.clone(),
            pre,
            add,
            delete,
            cost: schema.cost,
            duration: schema.duration,
        }
    }
}

/// Ground name of a template under a (possibly partial) binding; `None`
/// while some variable is still unbound.
fn substitute(t: &AtomTemplate, schema: &ActionSchema, binding: &[String]) -> Option<String> {
    let mut parts = vec![t.predicate.clone()];
    for arg in &t.args {
        match arg {
            Term::Const(c) => parts.push(c.clone()),
            Term::Var(v) => {
                let idx = schema.parameters.iter().position(|p| &p.name == v)?;
                parts.push(binding.get(idx)?.clone());
            }
        }
    }
    Some(format!("({})", parts.join(" ")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parse_domain;

    const BLOCKS: &str = "(define (domain bw) (:requirements :strips :typing) (:types block)
        (:predicates (on-table ?b - block) (holding ?b - block) (hand-empty))
        (:action pickup :parameters (?b - block) :precondition (and (on-table ?b) (hand-empty))
            :effect (and (holding ?b) (not (on-table ?b)) (not (hand-empty))))
        (:action putdown :parameters (?b - block) :precondition (holding ?b)
            :effect (and (on-table ?b) (hand-empty) (not (holding ?b)))))";

    #[test]
    fn grounds_every_binding() {
        let d = parse_domain(BLOCKS).unwrap();
        let p = parse_problem(
            "(define (problem p) (:domain bw) (:objects a b - block)
             (:init (on-table a) (on-table b) (hand-empty)) (:goal (holding a)))",
            &d,
        )
        .unwrap();
        assert_eq!(p.actions.len(), 2 * 2);
        let names: Vec<&str> = p.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["(pickup a)", "(pickup b)", "(putdown a)", "(putdown b)"]);
    }

    #[test]
    fn wrong_domain_name_is_a_mismatch() {
        let d = parse_domain(BLOCKS).unwrap();
        let err = parse_problem("(define (problem p) (:domain other) (:goal (hand-empty)))", &d).unwrap_err();
        assert!(matches!(err, PddlError::DomainMismatch { .. }));
    }

    #[test]
    fn empty_goal_is_rejected() {
        let d = parse_domain(BLOCKS).unwrap();
        let err = parse_problem("(define (problem p) (:domain bw) (:init (hand-empty)) (:goal (and)))", &d).unwrap_err();
        assert_eq!(err, PddlError::EmptyGoal);
    }

    #[test]
    fn undeclared_object_and_predicate() {
        let d = parse_domain(BLOCKS).unwrap();
        let err = parse_problem("(define (problem p) (:domain bw) (:init (on-table z)) (:goal (hand-empty)))", &d)
            .unwrap_err();
        assert_eq!(err, PddlError::UndeclaredObject("z".into()));
        let err = parse_problem("(define (problem p) (:domain bw) (:init (flying)) (:goal (hand-empty)))", &d)
            .unwrap_err();
        assert_eq!(err, PddlError::UndeclaredPredicate("flying".into()));
    }

    #[test]
    fn static_preconditions_prune_bindings() {
        let d = parse_domain(
            "(define (domain g) (:requirements :strips :typing) (:types node)
             (:predicates (at ?n - node) (edge ?a ?b - node))
             (:action move :parameters (?a ?b - node) :precondition (and (at ?a) (edge ?a ?b))
                :effect (and (at ?b) (not (at ?a)))))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem p) (:domain g) (:objects x y z - node)
             (:init (at x) (edge x y) (edge y z)) (:goal (at z)))",
            &d,
        )
        .unwrap();
        let names: Vec<&str> = p.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["(move x y)", "(move y z)"]);
    }

    #[test]
    fn grounding_is_deterministic() {
        let d = parse_domain(BLOCKS).unwrap();
        let text = "(define (problem p) (:domain bw) (:objects b a c - block)
             (:init (on-table a) (hand-empty)) (:goal (holding a)))";
        let a = parse_problem(text, &d).unwrap();
        let b = parse_problem(text, &d).unwrap();
        assert_eq!(a.actions, b.actions);
        let mut sorted: Vec<String> = a.actions.iter().map(|x| x.name.clone()).collect();
        sorted.sort();
        assert_eq!(sorted, a.actions.iter().map(|x| x.name.clone()).collect::<Vec<_>>());
    }
}

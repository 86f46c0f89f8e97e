use std::collections::HashSet;
use std::fmt;

use num_traits::{Signed, Zero};

use super::sexpr::{self, Pos, Sexpr};
use super::{ActionSchema, AtomTemplate, DomainDescription, PddlError, PredicateDecl, Requirement, Term, TypedName};
use crate::exact::{parse_decimal, to_decimal_string, Quantity};

pub fn parse_domain(text: &str) -> Result<DomainDescription, PddlError> {
    let root = sexpr::parse(text)?;
    let items = root.expect_list("`(define ...)`")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return Err(PddlError::syntax(root.pos(), "expected `(define (domain ...) ...)`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(root.pos(), "missing `(domain <name>)`"))?
        .expect_list("`(domain <name>)`")?;
    if header.len() != 2 || header[0].as_atom() != Some("domain") {
        return Err(PddlError::syntax(items[1].pos(), "expected `(domain <name>)`"));
    }
    let name = header[1].expect_atom("domain name")?.to_string();

    let mut domain = DomainDescription {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        total_cost: false,
        actions: Vec::new(),
    };

    for section in &items[2..] {
        let body = section.expect_list("a domain section")?;
        match section.head() {
            Some(":requirements") => domain.requirements = parse_requirements(&body[1..])?,
            Some(":types") => {
                if !domain.requirements.contains(&Requirement::Typing) {
                    return Err(PddlError::syntax(section.pos(), "`:types` requires `:typing`"));
                }
                domain.types = parse_typed_list(&body[1..], false)?;
            }
            Some(":constants") => domain.constants = parse_typed_list(&body[1..], false)?,
            Some(":predicates") => {
                for p in &body[1..] {
                    let decl = p.expect_list("a predicate declaration")?;
                    let pname = decl
                        .first()
                        .ok_or_else(|| PddlError::syntax(p.pos(), "empty predicate declaration"))?
                        .expect_atom("predicate name")?;
                    domain.predicates.push(PredicateDecl {
                        name: pname.to_string(),
                        params: parse_typed_list(&decl[1..], true)?,
                    });
                }
            }
            Some(":functions") => {
                domain.total_cost = parse_functions(&body[1..])?;
            }
            Some(":action") => {
                let action = parse_action(section, &domain)?;
                if domain.actions.iter().any(|a| a.name == action.name) {
                    return Err(PddlError::DuplicateAction(action.name));
                }
                domain.actions.push(action);
            }
            Some(other) => {
                return Err(PddlError::unsupported(section.pos(), format!("domain section `{other}`")))
            }
            None => return Err(PddlError::syntax(section.pos(), "expected a section keyword")),
        }
    }
    validate_types(&domain)?;
    Ok(domain)
}

fn parse_requirements(flags: &[Sexpr]) -> Result<Vec<Requirement>, PddlError> {
    let mut out = Vec::new();
    for f in flags {
        let req = match f.expect_atom("requirement flag")? {
            ":strips" => Requirement::Strips,
            ":typing" => Requirement::Typing,
            ":action-costs" => Requirement::ActionCosts,
            other => return Err(PddlError::UnsupportedRequirement(other.to_string())),
        };
        if !out.contains(&req) {
            out.push(req);
        }
    }
    Ok(out)
}

/// `a b - t c` style lists. Untyped names get type `object`.
pub(super) fn parse_typed_list(items: &[Sexpr], variables: bool) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = match &items[i] {
            Sexpr::Atom(s, _) => s.as_str(),
            Sexpr::List(_, pos) => {
                let what = if items[i].head() == Some("either") { "`either` types" } else { "nested list in typed list" };
                return Err(PddlError::unsupported(*pos, what));
            }
        };
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(items[i].pos(), "missing type after `-`"))?;
            let ty = match ty {
                Sexpr::Atom(t, _) => t.clone(),
                Sexpr::List(_, pos) => return Err(PddlError::unsupported(*pos, "`either` types")),
            };
            if pending.is_empty() {
                return Err(PddlError::syntax(items[i].pos(), "type annotation without names"));
            }
            out.extend(pending.drain(..).map(|name| TypedName { name, ty: ty.clone() }));
            i += 2;
            continue;
        }
        if variables != sym.starts_with('?') {
            let what = if variables { "a variable" } else { "a name" };
            return Err(PddlError::syntax(items[i].pos(), format!("expected {what}, found `{sym}`")));
        }
        pending.push(sym.to_string());
        i += 1;
    }
    out.extend(pending.into_iter().map(|name| TypedName { name, ty: "object".to_string() }));
    Ok(out)
}

fn parse_functions(items: &[Sexpr]) -> Result<bool, PddlError> {
    let mut total_cost = false;
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            Sexpr::List(f, pos) => {
                if f.len() == 1 && f[0].as_atom() == Some("total-cost") {
                    total_cost = true;
                } else {
                    return Err(PddlError::unsupported(*pos, "numeric fluents other than total-cost"));
                }
                i += 1;
            }
            Sexpr::Atom(s, pos) if s == "-" => {
                match items.get(i + 1).and_then(Sexpr::as_atom) {
                    Some("number") => {}
                    _ => return Err(PddlError::unsupported(*pos, "non-number function type")),
                }
                i += 2;
            }
            other => return Err(PddlError::syntax(other.pos(), "expected a function declaration")),
        }
    }
    Ok(total_cost)
}

fn parse_action(section: &Sexpr, domain: &DomainDescription) -> Result<ActionSchema, PddlError> {
    let body = section.as_list().unwrap_or_default();
    let name = body
        .get(1)
        .ok_or_else(|| PddlError::syntax(section.pos(), "missing action name"))?
        .expect_atom("action name")?
        .to_string();
    let mut schema = ActionSchema {
        name,
        parameters: Vec::new(),
        preconditions: Vec::new(),
        add_effects: Vec::new(),
        delete_effects: Vec::new(),
        cost: Quantity::from_integer(1),
        duration: Quantity::from_integer(1),
    };
    let mut explicit_cost: Option<Quantity> = None;
    let mut i = 2;
    while i < body.len() {
        let key = body[i].expect_atom("an action keyword")?;
        let value = body
            .get(i + 1)
            .ok_or_else(|| PddlError::syntax(body[i].pos(), format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => schema.parameters = parse_typed_list(value.expect_list("a parameter list")?, true)?,
            ":precondition" => {
                collect_conjunction(value, &mut |lit| match lit {
                    Literal::Pos(atom) => {
                        schema.preconditions.push(atom);
                        Ok(())
                    }
                    Literal::Neg(_, pos) => Err(PddlError::unsupported(pos, "negative preconditions")),
                    Literal::Increase(_, pos) => Err(PddlError::unsupported(pos, "numeric precondition")),
                })?;
            }
            ":effect" => {
                collect_conjunction(value, &mut |lit| {
                    match lit {
                        Literal::Pos(atom) => schema.add_effects.push(atom),
                        Literal::Neg(atom, _) => schema.delete_effects.push(atom),
                        Literal::Increase(amount, _) => {
                            *explicit_cost.get_or_insert_with(Quantity::zero) += amount;
                        }
                    }
                    Ok(())
                })?;
            }
            other => return Err(PddlError::unsupported(body[i].pos(), format!("action keyword `{other}`"))),
        }
        i += 2;
    }
    if let Some(cost) = explicit_cost {
        if cost.is_negative() {
            return Err(PddlError::InvalidCost { action: schema.name, message: "negative cost".into() });
        }
        schema.cost = cost;
    }
    dedup(&mut schema.preconditions);
    dedup(&mut schema.add_effects);
    dedup(&mut schema.delete_effects);
    if let Some(atom) = schema.add_effects.iter().find(|a| schema.delete_effects.contains(a)) {
        return Err(PddlError::ContradictoryEffect { action: schema.name.clone(), atom: atom.to_string() });
    }
    check_templates(&schema, domain)?;
    Ok(schema)
}

fn dedup(v: &mut Vec<AtomTemplate>) {
    let mut seen = HashSet::new();
    v.retain(|a| seen.insert(a.clone()));
}

enum Literal {
    Pos(AtomTemplate),
    Neg(AtomTemplate, Pos),
    Increase(Quantity, Pos),
}

fn collect_conjunction(
    expr: &Sexpr,
    sink: &mut dyn FnMut(Literal) -> Result<(), PddlError>,
) -> Result<(), PddlError> {
    let list = expr.expect_list("a condition or effect")?;
    match expr.head() {
        None if list.is_empty() => Ok(()),
        Some("and") => {
            for e in &list[1..] {
                collect_conjunction(e, sink)?;
            }
            Ok(())
        }
        Some("not") => {
            if list.len() != 2 {
                return Err(PddlError::syntax(expr.pos(), "`not` takes one argument"));
            }
            let atom = parse_atom(&list[1])?;
            sink(Literal::Neg(atom, expr.pos()))
        }
        Some("increase") => {
            if list.len() != 3 || list[1].as_list().map(|f| f.len() == 1 && f[0].as_atom() == Some("total-cost")) != Some(true) {
                return Err(PddlError::unsupported(expr.pos(), "`increase` on anything but (total-cost)"));
            }
            let amount = list[2]
                .as_atom()
                .and_then(parse_decimal)
                .ok_or_else(|| PddlError::unsupported(list[2].pos(), "non-constant cost expression"))?;
            sink(Literal::Increase(amount, expr.pos()))
        }
        Some(kw @ ("or" | "imply" | "forall" | "exists" | "when" | "decrease" | "assign" | "scale-up"
        | "scale-down" | "=" | "<" | ">" | "<=" | ">=")) => {
            Err(PddlError::unsupported(expr.pos(), format!("`{kw}` expressions")))
        }
        Some(kw @ ("at" | "over"))
            if matches!(list.get(1).and_then(Sexpr::as_atom), Some("start" | "end" | "all")) =>
        {
            Err(PddlError::unsupported(expr.pos(), format!("temporal `{kw}` expressions")))
        }
        _ => sink(Literal::Pos(parse_atom(expr)?)),
    }
}

pub(super) fn parse_atom(expr: &Sexpr) -> Result<AtomTemplate, PddlError> {
    let list = expr.expect_list("an atom")?;
    let predicate = list
        .first()
        .ok_or_else(|| PddlError::syntax(expr.pos(), "empty atom"))?
        .expect_atom("predicate name")?
        .to_string();
    let args = list[1..]
        .iter()
        .map(|a| {
            let s = a.expect_atom("a term")?;
            Ok(if s.starts_with('?') { Term::Var(s.to_string()) } else { Term::Const(s.to_string()) })
        })
        .collect::<Result<Vec<_>, PddlError>>()?;
    Ok(AtomTemplate { predicate, args })
}

fn check_templates(schema: &ActionSchema, domain: &DomainDescription) -> Result<(), PddlError> {
    let all = schema.preconditions.iter().chain(&schema.add_effects).chain(&schema.delete_effects);
    for atom in all {
        let decl = domain
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
        for arg in &atom.args {
            match arg {
                Term::Var(v) => {
                    if !schema.parameters.iter().any(|p| &p.name == v) {
                        return Err(PddlError::UnboundVariable {
                            action: schema.name.clone(),
                            var: v.clone(),
                        });
                    }
                }
                Term::Const(c) => {
                    if !domain.constants.iter().any(|k| &k.name == c) {
                        return Err(PddlError::UndeclaredObject(c.clone()));
                    }
                }
            }
        }
    }
    Ok(())
}

fn validate_types(domain: &DomainDescription) -> Result<(), PddlError> {
    // Supertypes named in `:types` count as declared.
    let known = |t: &str| t == "object" || domain.types.iter().any(|d| d.name == t || d.ty == t);
    let mentioned = domain
        .constants
        .iter()
        .map(|c| &c.ty)
        .chain(domain.predicates.iter().flat_map(|p| p.params.iter().map(|x| &x.ty)))
        .chain(domain.actions.iter().flat_map(|a| a.parameters.iter().map(|x| &x.ty)));
    for ty in mentioned {
        if !known(ty) {
            return Err(PddlError::UndeclaredType(ty.clone()));
        }
    }
    Ok(())
}

fn write_typed(f: &mut fmt::Formatter<'_>, items: &[TypedName], typed: bool) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        if typed {
            write!(f, "{} - {}", item.name, item.ty)?;
        } else {
            write!(f, "{}", item.name)?;
        }
    }
    Ok(())
}

fn write_conjunction(f: &mut fmt::Formatter<'_>, pos: &[AtomTemplate], neg: &[AtomTemplate], cost: Option<&Quantity>) -> fmt::Result {
    write!(f, "(and")?;
    for a in pos {
        write!(f, " {a}")?;
    }
    for a in neg {
        write!(f, " (not {a})")?;
    }
    if let Some(c) = cost {
        write!(f, " (increase (total-cost) {})", to_decimal_string(c))?;
    }
    write!(f, ")")
}

/// Prints the domain back as PDDL. Reparsing the output yields an equal
/// `DomainDescription` for any parsed domain.
impl fmt::Display for DomainDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let typed = self.requirements.contains(&Requirement::Typing);
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            let flags: Vec<&str> = self.requirements.iter().map(|r| r.keyword()).collect();
            writeln!(f, "  (:requirements {})", flags.join(" "))?;
        }
        if !self.types.is_empty() {
            write!(f, "  (:types ")?;
            write_typed(f, &self.types, true)?;
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            write!(f, "  (:constants ")?;
            write_typed(f, &self.constants, typed)?;
            writeln!(f, ")")?;
        }
        write!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            if !p.params.is_empty() {
                write!(f, " ")?;
                write_typed(f, &p.params, typed)?;
            }
            write!(f, ")")?;
        }
        writeln!(f, ")")?;
        if self.total_cost {
            writeln!(f, "  (:functions (total-cost) - number)")?;
        }
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            write!(f, "    :parameters (")?;
            write_typed(f, &a.parameters, typed)?;
            writeln!(f, ")")?;
            write!(f, "    :precondition ")?;
            write_conjunction(f, &a.preconditions, &[], None)?;
            writeln!(f)?;
            write!(f, "    :effect ")?;
            let cost = self.total_cost.then_some(&a.cost);
            write_conjunction(f, &a.add_effects, &a.delete_effects, cost)?;
            writeln!(f, ")")?;
        }
        writeln!(f, ")")
    }
}

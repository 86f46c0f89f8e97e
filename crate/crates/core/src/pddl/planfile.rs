use serde::{Deserialize, Serialize};

use super::{GroundProblem, PddlError};
use crate::exact::{to_f64, to_json_number};
use crate::plan::{project, Plan, TimeCostPoint};

/// One plan on disk: `{problem, steps, time?, cost?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(flatten)]
    pub entry: PlanFileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFileEntry {
    pub steps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<serde_json::Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<serde_json::Number>,
}

/// Several plans for one problem: `{problem, plans: [...]}`. Extra fields
/// (as written by the generators) are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSetFile {
    #[serde(default)]
    pub problem: Option<String>,
    pub plans: Vec<PlanFileEntry>,
}

pub fn read_plan_file(text: &str) -> Result<PlanFile, PddlError> {
    serde_json::from_str(text).map_err(|e| PddlError::Json(e.to_string()))
}

pub fn read_plan_set_file(text: &str) -> Result<PlanSetFile, PddlError> {
    serde_json::from_str(text).map_err(|e| PddlError::Json(e.to_string()))
}

fn number(q: &crate::exact::Quantity) -> Option<serde_json::Number> {
    match to_json_number(q) {
        serde_json::Value::Number(n) => Some(n),
        _ => None,
    }
}

impl PlanFileEntry {
    pub fn from_plan(problem: &GroundProblem, plan: &Plan, point: Option<&TimeCostPoint>) -> Self {
        PlanFileEntry {
            steps: plan.step_names(problem).into_iter().map(str::to_string).collect(),
            time: point.and_then(|p| number(&p.time)),
            cost: point.and_then(|p| number(&p.cost)),
        }
    }

    /// Resolves step names, validates the plan by simulation, and checks any
    /// stated `time`/`cost` against the recomputed values. Stated values
    /// match when they denote the same number as the exact value rendered
    /// to a double.
    pub fn resolve(&self, problem: &GroundProblem) -> Result<(Plan, TimeCostPoint), PddlError> {
        let steps = self
            .steps
            .iter()
            .map(|s| problem.action_id(s).ok_or_else(|| PddlError::UnknownAction(s.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let plan = Plan::new(steps);
        let point = project(problem, &plan)?;
        check_stated("time", self.time.as_ref(), &point.time)?;
        check_stated("cost", self.cost.as_ref(), &point.cost)?;
        Ok((plan, point))
    }
}

fn check_stated(
    field: &'static str,
    stated: Option<&serde_json::Number>,
    actual: &crate::exact::Quantity,
) -> Result<(), PddlError> {
    let Some(stated) = stated else { return Ok(()) };
    let exact = crate::exact::from_json_number(stated) == Some(*actual);
    let same_double = stated.as_f64() == Some(to_f64(actual));
    if exact || same_double {
        Ok(())
    } else {
        Err(PddlError::StatedValueMismatch { field, stated: stated.to_string(), actual: actual.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};
    use crate::plan::PlanError;

    fn three_plans() -> GroundProblem {
        let d = parse_domain(include_str!("../../fixtures/three-plans-domain.pddl")).unwrap();
        parse_problem(include_str!("../../fixtures/three-plans-problem.pddl"), &d).unwrap()
    }

    #[test]
    fn plan_file_resolves_and_checks_stated_values() {
        let p = three_plans();
        let f = read_plan_file(r#"{"problem": "x.pddl", "steps": ["(a1)", "a2", "(A3)"], "time": 3, "cost": 3}"#).unwrap();
        let (plan, point) = f.entry.resolve(&p).unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(point, TimeCostPoint::new(3, 3));

        let wrong = read_plan_file(r#"{"steps": ["a1", "a2", "a3"], "cost": 4}"#).unwrap();
        assert!(matches!(wrong.entry.resolve(&p), Err(PddlError::StatedValueMismatch { field: "cost", .. })));
    }

    #[test]
    fn invalid_step_is_named() {
        let p = three_plans();
        let f = read_plan_file(r#"{"steps": ["a5", "a1"]}"#).unwrap();
        match f.entry.resolve(&p) {
            Err(PddlError::Plan(PlanError::PreconditionViolation { step, action, .. })) => {
                assert_eq!((step, action.as_str()), (1, "(a1)"));
            }
            other => panic!("{other:?}"),
        }
        let f = read_plan_file(r#"{"steps": ["zz"]}"#).unwrap();
        assert_eq!(f.entry.resolve(&p).unwrap_err(), PddlError::UnknownAction("zz".into()));
    }

    #[test]
    fn written_entries_read_back() {
        let p = three_plans();
        let plan = Plan::new(vec![p.action_id("a5").unwrap(), p.action_id("a6").unwrap()]);
        let point = project(&p, &plan).unwrap();
        let entry = PlanFileEntry::from_plan(&p, &plan, Some(&point));
        let text = serde_json::to_string(&PlanFile { problem: None, entry }).unwrap();
        let back = read_plan_file(&text).unwrap();
        assert_eq!(back.entry.resolve(&p).unwrap(), (plan, point));
    }
}

use num_traits::Signed;
use num_traits::Zero;

use super::{GroundProblem, PddlError};
use crate::exact::from_json_number;

#[derive(Debug, Clone)]
pub struct DurationsOutcome {
    pub problem: GroundProblem,
    /// Sidecar keys that match no action schema. Not fatal.
    pub unknown: Vec<String>,
}

/// Applies a `{ "schema": duration, ... }` sidecar. Actions whose schema is
/// not mentioned keep duration 1.
pub fn load_durations(mut problem: GroundProblem, sidecar: &str) -> Result<DurationsOutcome, PddlError> {
    let value: serde_json::Value = serde_json::from_str(sidecar).map_err(|e| PddlError::Json(e.to_string()))?;
    let map = value
        .as_object()
        .ok_or_else(|| PddlError::Json("durations sidecar must be a JSON object".into()))?;
    let mut unknown = Vec::new();
    for (raw_name, raw) in map {
        let name = raw_name.to_ascii_lowercase();
        let duration = raw
            .as_number()
            .and_then(from_json_number)
            .ok_or_else(|| PddlError::InvalidDuration { name: name.clone(), value: raw.to_string() })?;
        if duration.is_zero() || duration.is_negative() {
            return Err(PddlError::InvalidDuration { name, value: raw.to_string() });
        }
        let mut matched = false;
        for action in problem.actions.iter_mut().filter(|a| a.schema == name) {
            action.duration = duration;
            matched = true;
        }
        if !matched {
            log::warn!("durations sidecar names unknown action schema `{name}`");
            unknown.push(name);
        }
    }
    unknown.sort();
    Ok(DurationsOutcome { problem, unknown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Quantity;
    use crate::pddl::{parse_domain, parse_problem};

    fn logistics() -> GroundProblem {
        let d = parse_domain(include_str!("../../fixtures/logistics3-domain.pddl")).unwrap();
        parse_problem(include_str!("../../fixtures/logistics3-problem.pddl"), &d).unwrap()
    }

    #[test]
    fn schema_durations_apply_to_all_instances() {
        let out = load_durations(logistics(), r#"{"drive": 3}"#).unwrap();
        assert!(out.unknown.is_empty());
        for a in &out.problem.actions {
            let expected = if a.schema == "drive" { 3 } else { 1 };
            assert_eq!(a.duration, Quantity::from_integer(expected), "{}", a.name);
        }
    }

    #[test]
    fn empty_sidecar_keeps_unit_durations() {
        let out = load_durations(logistics(), "{}").unwrap();
        assert!(out.problem.actions.iter().all(|a| a.duration == Quantity::from_integer(1)));
    }

    #[test]
    fn nonpositive_duration_is_an_error() {
        assert!(matches!(load_durations(logistics(), r#"{"drive": 0}"#), Err(PddlError::InvalidDuration { .. })));
        assert!(matches!(load_durations(logistics(), r#"{"drive": -2}"#), Err(PddlError::InvalidDuration { .. })));
        assert!(matches!(load_durations(logistics(), r#"{"drive": "x"}"#), Err(PddlError::InvalidDuration { .. })));
    }

    #[test]
    fn unknown_schema_is_only_a_warning() {
        let out = load_durations(logistics(), r#"{"teleport": 2, "fly": 0.5}"#).unwrap();
        assert_eq!(out.unknown, ["teleport"]);
        let fly = out.problem.actions.iter().find(|a| a.schema == "fly").unwrap();
        assert_eq!(fly.duration, Quantity::new(1, 2));
    }
}

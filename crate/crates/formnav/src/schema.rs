//! Bundled JSON Schemas for every persisted document.

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    FormModel,
    TransitionGraph,
    StateGraph,
    TestScript,
    RunResults,
    Scenario,
}

impl SchemaKind {
    pub const ALL: [SchemaKind; 6] = [
        SchemaKind::FormModel,
        SchemaKind::TransitionGraph,
        SchemaKind::StateGraph,
        SchemaKind::TestScript,
        SchemaKind::RunResults,
        SchemaKind::Scenario,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::FormModel => "form-model",
            SchemaKind::TransitionGraph => "transition-graph",
            SchemaKind::StateGraph => "state-graph",
            SchemaKind::TestScript => "test-script",
            SchemaKind::RunResults => "run-results",
            SchemaKind::Scenario => "scenario",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            SchemaKind::FormModel => include_str!("../../../schemas/form-model.json"),
            SchemaKind::TransitionGraph => include_str!("../../../schemas/transition-graph.json"),
            SchemaKind::StateGraph => include_str!("../../../schemas/state-graph.json"),
            SchemaKind::TestScript => include_str!("../../../schemas/test-script.json"),
            SchemaKind::RunResults => include_str!("../../../schemas/run-results.json"),
            SchemaKind::Scenario => include_str!("../../../schemas/scenario.json"),
        }
    }
}

/// Validate `instance`, returning one message per violation.
pub fn validate(kind: SchemaKind, instance: &Value) -> Result<(), Vec<String>> {
    let schema: Value = serde_json::from_str(kind.source()).expect("bundled schemas are JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schemas compile");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemas_compile() {
        for kind in SchemaKind::ALL {
            let schema: Value = serde_json::from_str(kind.source()).unwrap();
            assert!(jsonschema::validator_for(&schema).is_ok(), "{}", kind.name());
        }
    }

    #[test]
    fn rejects_wrong_version() {
        let doc = serde_json::json!({ "version": 2, "backend": "sim", "forms": [] });
        assert!(validate(SchemaKind::RunResults, &doc).is_err());
        let doc = serde_json::json!({ "version": 1, "backend": "sim", "forms": [] });
        assert!(validate(SchemaKind::RunResults, &doc).is_ok());
    }
}

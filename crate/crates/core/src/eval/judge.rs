//! Rubric-based scoring of navigation scenarios by a language model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::llm::{LanguageModel, Message};
use crate::scenario::NavigationScenario;

pub const BUILTIN_RUBRIC: &str = include_str!("../../../../rubric/v1.json");

/// Criterion keys, in rubric order.
pub const CRITERIA: [&str; 5] = ["completeness", "accuracy_of_expected", "user_experience", "robustness", "clarity_organization"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub key: String,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rubric {
    pub version: String,
    pub scale: Scale,
    pub criteria: Vec<Criterion>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("invalid rubric: {0}")]
    Rubric(String),
    #[error("score for {criterion} is {value}, outside [{min}, {max}]")]
    OutOfRange { criterion: String, value: f64, min: f64, max: f64 },
    #[error("malformed scores: {0}")]
    Malformed(String),
}

impl Rubric {
    pub fn builtin() -> Rubric {
        Rubric::parse(BUILTIN_RUBRIC).expect("built-in rubric is valid")
    }

    pub fn parse(json: &str) -> Result<Rubric, JudgeError> {
        let rubric: Rubric = serde_json::from_str(json).map_err(|e| JudgeError::Rubric(e.to_string()))?;
        let keys: Vec<&str> = rubric.criteria.iter().map(|c| c.key.as_str()).collect();
        if keys != CRITERIA {
            return Err(JudgeError::Rubric(format!("criteria must be {:?}, found {:?}", CRITERIA, keys)));
        }
        if rubric.scale.min.partial_cmp(&rubric.scale.max) != Some(core::cmp::Ordering::Less) {
            return Err(JudgeError::Rubric("scale min must be below max".into()));
        }
        Ok(rubric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionScores {
    pub completeness: f64,
    pub accuracy_of_expected: f64,
    pub user_experience: f64,
    pub robustness: f64,
    pub clarity_organization: f64,
}

impl CriterionScores {
    pub fn from_array(v: [f64; 5]) -> Self {
        CriterionScores { completeness: v[0], accuracy_of_expected: v[1], user_experience: v[2], robustness: v[3], clarity_organization: v[4] }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.completeness, self.accuracy_of_expected, self.user_experience, self.robustness, self.clarity_organization]
    }

    pub fn mean(&self) -> f64 {
        self.as_array().iter().sum::<f64>() / 5.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub scores: CriterionScores,
    /// Arithmetic mean of the five criteria.
    #[serde(rename = "final")]
    pub final_score: f64,
    pub judge_model: String,
    pub rubric_version: String,
}

impl JudgeScore {
    pub fn new(scores: CriterionScores, judge_model: impl Into<String>, rubric: &Rubric) -> Result<JudgeScore, JudgeError> {
        for (key, value) in CRITERIA.iter().zip(scores.as_array()) {
            if !(rubric.scale.min..=rubric.scale.max).contains(&value) {
                return Err(JudgeError::OutOfRange { criterion: key.to_string(), value, min: rubric.scale.min, max: rubric.scale.max });
            }
        }
        Ok(JudgeScore { final_score: scores.mean(), scores, judge_model: judge_model.into(), rubric_version: rubric.version.clone() })
    }

    /// Final score with two decimals.
    pub fn rendered_final(&self) -> String {
        format!("{:.2}", self.final_score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JudgeRecord {
    Scored(JudgeScore),
    Unscored { judge_model: String, rubric_version: String, warnings: Vec<String> },
}

impl JudgeRecord {
    pub fn score(&self) -> Option<&JudgeScore> {
        match self {
            JudgeRecord::Scored(s) => Some(s),
            JudgeRecord::Unscored { .. } => None,
        }
    }
}

/// Plain-text rendering of a scenario for the judge.
pub fn scenario_text(scenario: &NavigationScenario) -> String {
    let mut out = format!("Test request: navigate from {} to {}.\n", scenario.request.start, scenario.request.destination);
    if scenario.steps.is_empty() {
        out.push_str("The start page is the destination; the scenario has no steps.\n");
    }
    for step in &scenario.steps {
        out.push_str(&format!("Step {}: {}\n  Expected: {}\n", step.index, step.action, step.expected));
    }
    out
}

pub fn judge_messages(scenario: &str, rubric: &Rubric) -> Vec<Message> {
    let mut criteria = String::new();
    for c in &rubric.criteria {
        criteria.push_str(&format!("- {} (\"{}\"): {}\n", c.name, c.key, c.description));
    }
    let keys: Vec<String> = CRITERIA.iter().map(|k| format!("\"{}\": <number>", k)).collect();
    let system = format!(
        "You evaluate web navigation test scenarios. Score the scenario on each criterion from {} to {}.\n\nCriteria:\n{}\nReply with a single JSON object and nothing else: {{{}}}",
        rubric.scale.min,
        rubric.scale.max,
        criteria,
        keys.join(", ")
    );
    vec![Message::system(system), Message::user(format!("Scenario:\n{}", scenario))]
}

/// Read the five scores from the first JSON object in `text`.
pub fn parse_judge_response(text: &str, rubric: &Rubric) -> Result<CriterionScores, JudgeError> {
    let start = text.find('{').ok_or_else(|| JudgeError::Malformed("no JSON object".into()))?;
    let end = text.rfind('}').filter(|&e| e > start).ok_or_else(|| JudgeError::Malformed("unterminated JSON object".into()))?;
    let value: serde_json::Value = serde_json::from_str(&text[start..=end]).map_err(|e| JudgeError::Malformed(e.to_string()))?;
    scores_from_value(&value, rubric)
}

fn scores_from_value(value: &serde_json::Value, rubric: &Rubric) -> Result<CriterionScores, JudgeError> {
    let mut out = [0.0; 5];
    for (slot, key) in out.iter_mut().zip(CRITERIA) {
        let v = value.get(key).ok_or_else(|| JudgeError::Malformed(format!("missing {}", key)))?;
        *slot = v.as_f64().ok_or_else(|| JudgeError::Malformed(format!("{} is not a number", key)))?;
        if !(rubric.scale.min..=rubric.scale.max).contains(slot) {
            return Err(JudgeError::OutOfRange { criterion: key.to_string(), value: *slot, min: rubric.scale.min, max: rubric.scale.max });
        }
    }
    Ok(CriterionScores::from_array(out))
}

const RETRY_PROMPT: &str = "Your reply could not be parsed. Answer again with only the JSON object of five numeric scores.";

/// Ask `model` for scores, retrying once when the reply cannot be parsed. Failures after the
/// retry produce an unscored record.
pub fn judge_scenario<M: LanguageModel + ?Sized>(scenario: &NavigationScenario, model: &mut M, rubric: &Rubric) -> JudgeRecord {
    let mut messages = judge_messages(&scenario_text(scenario), rubric);
    let mut warnings = Vec::new();
    for attempt in 0..2 {
        match model.complete(&messages) {
            Ok(completion) => match parse_judge_response(&completion.text, rubric) {
                Ok(scores) => match JudgeScore::new(scores, model.model_id(), rubric) {
                    Ok(score) => return JudgeRecord::Scored(score),
                    Err(e) => warnings.push(format!("attempt {}: {}", attempt + 1, e)),
                },
                Err(e) => {
                    warnings.push(format!("attempt {}: {}", attempt + 1, e));
                    messages.push(Message { role: crate::llm::Role::Assistant, content: completion.text });
                    messages.push(Message::user(RETRY_PROMPT));
                }
            },
            Err(e) => warnings.push(format!("attempt {}: {}", attempt + 1, e)),
        }
    }
    JudgeRecord::Unscored { judge_model: model.model_id().to_string(), rubric_version: rubric.version.clone(), warnings }
}

/// Scores supplied from a file: either the five keys directly, or
/// `{"judge_model": ..., "scores": {...}}`.
pub fn offline_score(json: &str, rubric: &Rubric) -> Result<JudgeScore, JudgeError> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| JudgeError::Malformed(e.to_string()))?;
    let model = value.get("judge_model").and_then(|m| m.as_str()).unwrap_or("offline");
    let scores = scores_from_value(value.get("scores").unwrap_or(&value), rubric)?;
    JudgeScore::new(scores, model, rubric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ReplayModel, Role};
    use crate::scenario::{Endpoint, Generator, TestRequest, SCENARIO_VERSION};

    fn scenario() -> NavigationScenario {
        NavigationScenario {
            version: SCENARIO_VERSION,
            request: TestRequest { start: Endpoint::Node(0), destination: Endpoint::Node(0) },
            start_id: 0,
            destination_id: 0,
            steps: vec![],
            generator: Generator::Fallback,
            trivially_satisfied: true,
        }
    }

    fn reply(v: [f64; 5]) -> String {
        let pairs: Vec<String> = CRITERIA.iter().zip(v).map(|(k, x)| format!("\"{}\": {}", k, x)).collect();
        format!("{{{}}}", pairs.join(", "))
    }

    #[test]
    fn builtin_rubric_has_five_criteria() {
        let r = Rubric::builtin();
        assert_eq!(r.criteria.len(), 5);
        assert_eq!((r.scale.min, r.scale.max), (0.0, 10.0));
        let prompt = &judge_messages("x", &r)[0].content;
        for c in &r.criteria {
            assert!(prompt.contains(&c.description));
        }
    }

    #[test]
    fn table_row_mean_renders_two_decimals() {
        let rubric = Rubric::builtin();
        let mut m = ReplayModel::new("gpt-4o-mini", [reply([7.63, 8.46, 7.61, 5.61, 8.70])]);
        let record = judge_scenario(&scenario(), &mut m, &rubric);
        let score = record.score().unwrap();
        assert!((score.final_score - 7.602).abs() < 1e-9);
        assert_eq!(score.rendered_final(), "7.60");
        assert_eq!(score.judge_model, "gpt-4o-mini");
    }

    #[test]
    fn all_tens() {
        let mut m = ReplayModel::new("j", [format!("Scores: {}", reply([10.0; 5]))]);
        assert_eq!(judge_scenario(&scenario(), &mut m, &Rubric::builtin()).score().unwrap().final_score, 10.0);
    }

    #[test]
    fn retry_once_then_unscored() {
        let rubric = Rubric::builtin();
        let mut m = ReplayModel::new("j", ["nope".to_string(), reply([8.0; 5])]);
        assert!(judge_scenario(&scenario(), &mut m, &rubric).score().is_some());
        assert_eq!(m.prompts[1].last().unwrap().content, RETRY_PROMPT);
        assert_eq!(m.prompts[1][2].role, Role::Assistant);

        let mut m = ReplayModel::new("j", ["nope".to_string(), "{\"completeness\": 3}".to_string()]);
        match judge_scenario(&scenario(), &mut m, &rubric) {
            JudgeRecord::Unscored { warnings, .. } => assert_eq!(warnings.len(), 2),
            other => panic!("{:?}", other),
        }
        assert_eq!(m.prompts.len(), 2);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let rubric = Rubric::builtin();
        assert!(matches!(parse_judge_response(&reply([11.0, 1.0, 1.0, 1.0, 1.0]), &rubric), Err(JudgeError::OutOfRange { .. })));
    }

    #[test]
    fn offline_formats() {
        let rubric = Rubric::builtin();
        let direct = offline_score(&reply([7.63, 8.46, 7.61, 5.61, 8.70]), &rubric).unwrap();
        assert_eq!(direct.rendered_final(), "7.60");
        assert_eq!(direct.judge_model, "offline");
        let wrapped = format!("{{\"judge_model\": \"gpt-4o-mini\", \"scores\": {}}}", reply([1.0; 5]));
        assert_eq!(offline_score(&wrapped, &rubric).unwrap().judge_model, "gpt-4o-mini");
        assert!(offline_score("{}", &rubric).is_err());
    }

    #[test]
    fn rubric_validation() {
        assert!(Rubric::parse(r#"{"version":"x","scale":{"min":0,"max":10},"criteria":[]}"#).is_err());
    }
}

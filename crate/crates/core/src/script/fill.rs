//! Fill values per field type, by rules or through a language model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::browser::Action;
use crate::constraints::{compare, first_non_empty, sample_for_pattern, validate};
use crate::dom::{ControlType, FieldDescriptor};
use crate::llm::{LanguageModel, Message};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillMode {
    #[default]
    Rules,
    Llm,
}

impl FillMode {
    pub fn parse(s: &str) -> Option<FillMode> {
        match s {
            "rules" => Some(FillMode::Rules),
            "llm" => Some(FillMode::Llm),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillSource {
    Rules,
    Llm,
    /// The model's answer was unusable and the rules value was used instead.
    LlmFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FillError {
    #[error("cannot fill {field}: {reason}")]
    UnsupportedField { field: String, reason: String },
}

/// Path sent for file inputs.
pub const DEFAULT_UPLOAD_PATH: &str = "/tmp/formnav-upload.txt";

fn unsupported(field: &FieldDescriptor, reason: impl Into<String>) -> FillError {
    FillError::UnsupportedField { field: field.locator.to_string(), reason: reason.into() }
}

fn base_text(control: ControlType) -> &'static str {
    match control {
        ControlType::Email => "user@example.com",
        ControlType::Url => "https://example.com",
        ControlType::Tel => "5551234567",
        ControlType::Password => "Passw0rd!",
        ControlType::Search => "query",
        ControlType::Textarea => "Sample text",
        _ => "test value",
    }
}

fn within_range(field: &FieldDescriptor, default: &str) -> String {
    let c = &field.constraints;
    if let Some(min) = &c.min {
        if compare(field.control, default, min) == Some(core::cmp::Ordering::Less) {
            return min.clone();
        }
    }
    if let Some(max) = &c.max {
        if compare(field.control, default, max) == Some(core::cmp::Ordering::Greater) {
            return max.clone();
        }
    }
    default.to_string()
}

fn text_value(field: &FieldDescriptor) -> Result<String, FillError> {
    let c = &field.constraints;
    let mut value = match &c.pattern {
        Some(p) if field.control != ControlType::Textarea => {
            sample_for_pattern(p).ok_or_else(|| unsupported(field, format!("no sample for pattern {:?}", p)))?
        }
        _ => base_text(field.control).to_string(),
    };
    if let Some(min) = c.minlength {
        while value.chars().count() < min {
            value.push('x');
        }
    }
    if let Some(max) = c.maxlength {
        value = value.chars().take(max).collect();
    }
    Ok(value)
}

/// Value chosen by the built-in rules, as the action that applies it.
pub fn rules_value(field: &FieldDescriptor, upload_path: &str) -> Result<Action, FillError> {
    let action = match field.control {
        ControlType::Hidden => return Err(unsupported(field, "hidden inputs are not filled")),
        ControlType::Checkbox => return Ok(Action::Toggle),
        ControlType::Radio | ControlType::Select => {
            let option = first_non_empty(&field.options).ok_or_else(|| unsupported(field, "no options"))?;
            return Ok(Action::SelectOption(option.to_string()));
        }
        ControlType::File => return Ok(Action::SetValue(upload_path.to_string())),
        ControlType::Number => Action::SetValue(within_range(field, "1")),
        ControlType::Range => Action::SetValue(within_range(field, "50")),
        ControlType::Date => Action::SetValue(within_range(field, "2024-01-15")),
        ControlType::Month => Action::SetValue(within_range(field, "2024-01")),
        ControlType::Week => Action::SetValue(within_range(field, "2024-W03")),
        ControlType::Time => Action::SetValue(within_range(field, "12:00")),
        ControlType::Color => Action::SetValue("#336699".into()),
        ControlType::Text
        | ControlType::Email
        | ControlType::Password
        | ControlType::Url
        | ControlType::Tel
        | ControlType::Search
        | ControlType::Textarea => Action::SetValue(text_value(field)?),
    };
    check(field, &action)?;
    Ok(action)
}

fn check(field: &FieldDescriptor, action: &Action) -> Result<(), FillError> {
    match action {
        Action::SetValue(v) if field.control != ControlType::File => {
            validate(field.control, &field.constraints, v).map_err(|e| unsupported(field, format!("{:?} for {:?}", e, v)))
        }
        Action::SelectOption(v) if !field.options.contains(v) => Err(unsupported(field, format!("{:?} is not an option", v))),
        _ => Ok(()),
    }
}

/// Prompt describing one field: type, name, label, options and constraints.
pub fn fill_prompt(field: &FieldDescriptor) -> String {
    let mut p = format!(
        "Suggest one realistic value for an HTML form field.\nType: {}\nName: {}\n",
        field.control.as_str(),
        field.name
    );
    if let Some(label) = &field.label {
        p.push_str(&format!("Label: {}\n", label));
    }
    if !field.options.is_empty() {
        p.push_str(&format!("Options: {}\n", field.options.join(", ")));
    }
    let c = &field.constraints;
    let mut parts: Vec<String> = Vec::new();
    if let Some(v) = &c.min {
        parts.push(format!("min={}", v));
    }
    if let Some(v) = &c.max {
        parts.push(format!("max={}", v));
    }
    if let Some(v) = &c.pattern {
        parts.push(format!("pattern={}", v));
    }
    if let Some(v) = c.minlength {
        parts.push(format!("minlength={}", v));
    }
    if let Some(v) = c.maxlength {
        parts.push(format!("maxlength={}", v));
    }
    if !parts.is_empty() {
        p.push_str(&format!("Constraints: {}\n", parts.join(", ")));
    }
    p.push_str("Reply with the value only.");
    p
}

/// First non-empty line of a completion, without surrounding quotes or backticks.
pub fn parse_fill_response(text: &str) -> Option<String> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let value = line.trim_matches(|c| c == '"' || c == '\'' || c == '`').trim();
    (!value.is_empty()).then(|| value.to_string())
}

/// Value for `field` in the given mode. Model answers that fail the field's constraints are
/// replaced by the rules value.
pub fn generate_fill_value<M: LanguageModel + ?Sized>(
    field: &FieldDescriptor,
    mode: FillMode,
    llm: Option<&mut M>,
    upload_path: &str,
) -> Result<(Action, FillSource), FillError> {
    let rules = rules_value(field, upload_path);
    let asks_model = mode == FillMode::Llm
        && !matches!(field.control, ControlType::Checkbox | ControlType::File | ControlType::Hidden);
    let Some(llm) = llm.filter(|_| asks_model) else {
        return rules.map(|a| (a, FillSource::Rules));
    };
    let answer = llm.complete(&[Message::user(fill_prompt(field))]).ok().and_then(|c| parse_fill_response(&c.text));
    if let Some(value) = answer {
        let action = match field.control {
            ControlType::Radio | ControlType::Select => Action::SelectOption(value),
            _ => Action::SetValue(value),
        };
        if check(field, &action).is_ok() {
            return Ok((action, FillSource::Llm));
        }
    }
    rules.map(|a| (a, FillSource::LlmFallback))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse_number;
    use crate::dom::{Constraints, ElementRef, Required};
    use crate::llm::ReplayModel;
    use alloc::vec;

    fn field(control: ControlType, constraints: Constraints) -> FieldDescriptor {
        FieldDescriptor {
            locator: ElementRef::name("f"),
            control,
            name: "f".into(),
            required: Required::No,
            options: Vec::new(),
            constraints,
            visible: true,
            enabled: true,
            label: None,
            element_id: None,
        }
    }

    fn value(a: Action) -> String {
        match a {
            Action::SetValue(v) | Action::SelectOption(v) => v,
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn typed_values() {
        let v = value(rules_value(&field(ControlType::Email, Constraints::default()), DEFAULT_UPLOAD_PATH).unwrap());
        let (local, domain) = v.split_once('@').unwrap();
        assert!(!local.is_empty() && domain.contains('.'));
        let range = Constraints { min: Some("5".into()), max: Some("9".into()), ..Default::default() };
        let n = parse_number(&value(rules_value(&field(ControlType::Number, range), "").unwrap())).unwrap();
        assert!((5.0..=9.0).contains(&n));
        let date = Constraints { min: Some("2030-02-01".into()), ..Default::default() };
        assert_eq!(value(rules_value(&field(ControlType::Date, date), "").unwrap()), "2030-02-01");
        let d = value(rules_value(&field(ControlType::Date, Constraints::default()), "").unwrap());
        assert_eq!((d.len(), &d[4..5], &d[7..8]), (10, "-", "-"));
    }

    #[test]
    fn patterns_and_lengths() {
        let zip = Constraints { pattern: Some("[0-9]{5}".into()), ..Default::default() };
        assert_eq!(value(rules_value(&field(ControlType::Text, zip), "").unwrap()), "00000");
        let long = Constraints { minlength: Some(12), maxlength: Some(14), ..Default::default() };
        assert_eq!(value(rules_value(&field(ControlType::Text, long), "").unwrap()).len(), 12);
        let look = Constraints { pattern: Some("(?=a)a".into()), ..Default::default() };
        assert!(rules_value(&field(ControlType::Text, look), "").is_err());
        assert!(rules_value(&field(ControlType::Select, Constraints::default()), "").is_err());
    }

    #[test]
    fn llm_answers_are_checked() {
        let mut f = field(ControlType::Number, Constraints { min: Some("5".into()), max: Some("9".into()), ..Default::default() });
        let mut m = ReplayModel::new("m", vec!["\"7\"".into(), "12".into()]);
        assert_eq!(generate_fill_value(&f, FillMode::Llm, Some(&mut m), "").unwrap(), (Action::SetValue("7".into()), FillSource::Llm));
        assert_eq!(generate_fill_value(&f, FillMode::Llm, Some(&mut m), "").unwrap(), (Action::SetValue("5".into()), FillSource::LlmFallback));
        assert!(m.prompts[0][0].content.contains("min=5, max=9"));
        f.control = ControlType::Checkbox;
        assert_eq!(generate_fill_value(&f, FillMode::Llm, Some(&mut m), "").unwrap(), (Action::Toggle, FillSource::Rules));
        assert_eq!(m.prompts.len(), 2);
    }
}

//! Script execution with one record per field-touching command.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{TestCommand, TestScript};
use crate::browser::{Action, BrowserError, Session};
use crate::dom::{parse_document, ControlType, ElementRef};
use crate::dom::is_visible;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    NotFound,
    NotInteractable,
    ValueRejected,
    ValidationError,
    BackendError,
}

impl FailReason {
    fn of(error: &BrowserError) -> FailReason {
        match error {
            BrowserError::ElementNotFound(_) => FailReason::NotFound,
            BrowserError::ElementNotInteractable(_) => FailReason::NotInteractable,
            BrowserError::ValueRejected(_) | BrowserError::InvalidAction(_) => FailReason::ValueRejected,
            _ => FailReason::BackendError,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Fail(FailReason),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub command_index: usize,
    #[serde(rename = "ref")]
    pub locator: ElementRef,
    pub control: ControlType,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// False for fields that no command touched and that only appear because they failed
    /// validation at submit.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub attempted: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub command_index: usize,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRun {
    pub script_id: String,
    pub target_state: usize,
    pub records: Vec<InteractionRecord>,
    pub assertions: Vec<AssertionOutcome>,
    /// Set when a navigation failed and the remaining commands were skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl ScriptRun {
    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.records.iter().all(|r| r.outcome.is_success()) && self.assertions.iter().all(|a| a.passed)
    }
}

pub const RUN_RESULTS_VERSION: u32 = 1;

/// Every script run for one form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormRun {
    /// Key of the form's manifest, when it has one (the benchmark id, e.g. `0001`).
    pub form: String,
    pub page_url: String,
    pub runs: Vec<ScriptRun>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResults {
    pub version: u32,
    pub backend: String,
    pub forms: Vec<FormRun>,
}

impl RunResults {
    pub fn new(backend: impl Into<String>) -> Self {
        RunResults { version: RUN_RESULTS_VERSION, backend: backend.into(), forms: Vec::new() }
    }

    /// True when any interaction failed, any assertion failed or any run aborted.
    pub fn has_failures(&self) -> bool {
        self.forms.iter().flat_map(|f| &f.runs).any(|r| !r.passed())
    }
}

fn command_action(command: &TestCommand) -> Option<(&ElementRef, Action)> {
    Some(match command {
        TestCommand::Click { locator } => (locator, Action::Click),
        TestCommand::SetValue { locator, value, .. } => (locator, Action::SetValue(value.clone())),
        TestCommand::SelectOption { locator, value, .. } => (locator, Action::SelectOption(value.clone())),
        TestCommand::Toggle { locator, .. } => (locator, Action::Toggle),
        TestCommand::Submit { locator } => (locator, Action::Submit),
        _ => return None,
    })
}

/// Execute `script` in order. Only a failed navigation stops the run; other failures are
/// recorded. Fields that fail validation at submit are marked `validation_error`, on their
/// earlier record when there is one.
pub fn run_script<S: Session + ?Sized>(script: &TestScript, session: &mut S) -> ScriptRun {
    let mut run = ScriptRun {
        script_id: script.id.clone(),
        target_state: script.target_state,
        records: Vec::new(),
        assertions: Vec::new(),
        aborted: None,
    };
    let mut last_invalid: Option<Result<Vec<ElementRef>, String>> = None;
    for (index, command) in script.commands.iter().enumerate() {
        match command {
            TestCommand::Navigate { url } => {
                if let Err(e) = session.navigate(url) {
                    run.aborted = Some(format!("navigate to {}: {}", url, e));
                    break;
                }
            }
            TestCommand::AssertVisible { locator } => {
                let verdict = session.page_source().map(|src| {
                    let doc = parse_document(&src);
                    locator.resolve_one(&doc).is_some_and(|p| is_visible(&doc, &p))
                });
                let (passed, detail) = match verdict {
                    Ok(true) => (true, String::new()),
                    Ok(false) => (false, format!("{} is not visible", locator)),
                    Err(e) => (false, e.to_string()),
                };
                run.assertions.push(AssertionOutcome { command_index: index, passed, detail });
            }
            TestCommand::AssertNoValidationError => {
                let (passed, detail) = match &last_invalid {
                    None => (false, "no submit preceded the assertion".to_string()),
                    Some(Ok(invalid)) if invalid.is_empty() => (true, String::new()),
                    Some(Ok(invalid)) => {
                        let names: Vec<String> = invalid.iter().map(|l| l.to_string()).collect();
                        (false, format!("invalid fields: {}", names.join(", ")))
                    }
                    Some(Err(e)) => (false, e.clone()),
                };
                run.assertions.push(AssertionOutcome { command_index: index, passed, detail });
            }
            TestCommand::Submit { locator } => {
                let invalid = session.validation_errors(&script.form);
                match &invalid {
                    Ok(fields) => {
                        for field in fields {
                            mark_invalid(&mut run.records, index, &field.locator, field.control);
                        }
                    }
                    Err(e) => {
                        run.assertions.push(AssertionOutcome { command_index: index, passed: false, detail: e.to_string() })
                    }
                }
                last_invalid = Some(invalid.map(|v| v.into_iter().map(|f| f.locator).collect()).map_err(|e| e.to_string()));
                if let Err(e) = session.interact(locator, &Action::Submit) {
                    run.assertions.push(AssertionOutcome { command_index: index, passed: false, detail: format!("submit: {}", e) });
                }
            }
            _ => {
                let Some((locator, action)) = command_action(command) else { continue };
                let result = session.interact(locator, &action);
                if let Some((field, control)) = command.touched_field() {
                    let (outcome, detail) = match &result {
                        Ok(()) => (Outcome::Success, None),
                        Err(e) => (Outcome::Fail(FailReason::of(e)), Some(e.to_string())),
                    };
                    run.records.push(InteractionRecord { command_index: index, locator: field.clone(), control, outcome, detail, attempted: true });
                } else if let Err(e) = result {
                    run.assertions.push(AssertionOutcome { command_index: index, passed: false, detail: e.to_string() });
                }
            }
        }
    }
    run
}

fn mark_invalid(records: &mut Vec<InteractionRecord>, index: usize, locator: &ElementRef, control: ControlType) {
    let detail = Some("failed validation at submit".to_string());
    match records.iter_mut().rev().find(|r| &r.locator == locator) {
        Some(r) if r.outcome.is_success() => {
            r.outcome = Outcome::Fail(FailReason::ValidationError);
            r.detail = detail;
        }
        Some(_) => {}
        None => records.push(InteractionRecord {
            command_index: index,
            locator: locator.clone(),
            control,
            outcome: Outcome::Fail(FailReason::ValidationError),
            detail,
            attempted: false,
        }),
    }
}

//! Browser sessions. One [`Session`] contract, implemented by the in-process
//! [`SimulatorSession`] and by the W3C WebDriver client [`WebDriverSession`].

mod manifest;
mod simulator;
mod webdriver;

pub use manifest::{
    Condition, Effect, GroundTruth, GroundTruthField, ManifestButton, ReactionManifest, Region, Rule, Visibility,
    MANIFEST_VERSION,
};
pub use simulator::{SimulatorSession, SimulatorStats, SiteBundle, Submission};
pub use webdriver::{HttpMethod, Transport, TransportError, WebDriverSession, ELEMENT_KEY};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::constraints::{self, Violation};
use crate::dom::{fields_in, ControlType, Element, ElementRef, FieldDescriptor, HtmlDocument, NodePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Webdriver,
    #[serde(alias = "sim")]
    Simulator,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Webdriver => "webdriver",
            BackendKind::Simulator => "simulator",
        }
    }

    pub fn parse(s: &str) -> Option<BackendKind> {
        match s {
            "webdriver" => Some(BackendKind::Webdriver),
            "sim" | "simulator" => Some(BackendKind::Simulator),
            _ => None,
        }
    }
}

/// An interaction applied to one element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Action {
    Click,
    SetValue(String),
    SelectOption(String),
    Toggle,
    /// Submit the form that is or contains the target.
    Submit,
}

impl Action {
    pub fn describe(&self) -> String {
        match self {
            Action::Click => "click".into(),
            Action::SetValue(v) => alloc::format!("set value {:?}", v),
            Action::SelectOption(v) => alloc::format!("select {:?}", v),
            Action::Toggle => "toggle".into(),
            Action::Submit => "submit".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BrowserError {
    #[error("page not found: {0}")]
    PageNotFound(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("session lost: {0}")]
    SessionLost(String),
    #[error("element not found: {0}")]
    ElementNotFound(String),
    #[error("element not interactable: {0}")]
    ElementNotInteractable(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("value rejected: {0}")]
    ValueRejected(String),
    #[error("invalid url: {0}")]
    InvalidUrl(String),
    #[error("no page loaded")]
    NoPage,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl BrowserError {
    /// Errors after which the session cannot be used any more.
    pub fn is_fatal(&self) -> bool {
        matches!(self, BrowserError::SessionLost(_) | BrowserError::Timeout(_) | BrowserError::Protocol(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Remote driver URL, for the WebDriver backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub command_timeout_ms: u64,
    pub page_load_timeout_ms: u64,
    /// Pause before each navigation.
    pub politeness_delay_ms: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { endpoint: None, command_timeout_ms: 10_000, page_load_timeout_ms: 30_000, politeness_delay_ms: 0 }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.command_timeout_ms == 0 || self.page_load_timeout_ms == 0 {
            return Err("timeouts must be positive".into());
        }
        Ok(())
    }
}

pub trait Session {
    fn backend(&self) -> BackendKind;

    fn config(&self) -> &SessionConfig;

    fn navigate(&mut self, url: &str) -> Result<(), BrowserError>;

    /// Canonical URL of the loaded page.
    fn current_url(&mut self) -> Result<String, BrowserError>;

    fn page_source(&mut self) -> Result<String, BrowserError>;

    fn interact(&mut self, target: &ElementRef, action: &Action) -> Result<(), BrowserError>;

    /// Locators of visible fields inside `scope` that would block submission.
    fn validation_errors(&mut self, scope: &ElementRef) -> Result<Vec<FieldDescriptor>, BrowserError>;

    fn close(&mut self) -> Result<(), BrowserError>;

    /// Reload the current page, discarding interaction state.
    fn reload(&mut self) -> Result<(), BrowserError> {
        let url = self.current_url()?;
        self.navigate(&url)
    }
}

impl<S: Session + ?Sized> Session for alloc::boxed::Box<S> {
    fn backend(&self) -> BackendKind {
        (**self).backend()
    }
    fn config(&self) -> &SessionConfig {
        (**self).config()
    }
    fn navigate(&mut self, url: &str) -> Result<(), BrowserError> {
        (**self).navigate(url)
    }
    fn current_url(&mut self) -> Result<String, BrowserError> {
        (**self).current_url()
    }
    fn page_source(&mut self) -> Result<String, BrowserError> {
        (**self).page_source()
    }
    fn interact(&mut self, target: &ElementRef, action: &Action) -> Result<(), BrowserError> {
        (**self).interact(target, action)
    }
    fn validation_errors(&mut self, scope: &ElementRef) -> Result<Vec<FieldDescriptor>, BrowserError> {
        (**self).validation_errors(scope)
    }
    fn close(&mut self) -> Result<(), BrowserError> {
        (**self).close()
    }
    fn reload(&mut self) -> Result<(), BrowserError> {
        (**self).reload()
    }
}

/// Current value of a control as held in the DOM: `value` attributes for typed inputs, text
/// for textareas, the selected option for selects, and the checked member's value (or empty)
/// for checkboxes and radio groups.
pub fn dom_value(doc: &HtmlDocument, path: &[usize]) -> String {
    let Some(el) = doc.element(path) else { return String::new() };
    match ControlType::of_element(el) {
        Some(ControlType::Textarea) => el.text_content(),
        Some(ControlType::Select) => selected_option(el).unwrap_or_default(),
        Some(ControlType::Checkbox) => checked_value(el),
        Some(ControlType::Radio) => radio_group(doc, path)
            .into_iter()
            .filter_map(|p| doc.element(&p))
            .find(|e| e.has_attr("checked"))
            .map(checked_value)
            .unwrap_or_default(),
        _ => el.attr("value").unwrap_or("").into(),
    }
}

fn checked_value(el: &Element) -> String {
    if el.has_attr("checked") {
        el.attr("value").unwrap_or("on").into()
    } else {
        String::new()
    }
}

pub(crate) fn option_value(option: &Element) -> String {
    option.attr("value").map(String::from).unwrap_or_else(|| option.normalized_text())
}

fn selected_option(select: &Element) -> Option<String> {
    let options: Vec<&Element> = select.walk().into_iter().filter(|(_, e)| e.tag == "option").map(|(_, e)| e).collect();
    options.iter().find(|o| o.has_attr("selected")).or(options.first()).map(|o| option_value(o))
}

/// Paths of all radio buttons in the same group as the radio at `path`: same name, same form.
pub fn radio_group(doc: &HtmlDocument, path: &[usize]) -> Vec<NodePath> {
    let Some(el) = doc.element(path) else { return Vec::new() };
    let Some(name) = el.attr("name").filter(|n| !n.is_empty()) else {
        return alloc::vec![path.to_vec()];
    };
    let owner = form_owner(doc, path);
    doc.walk()
        .into_iter()
        .filter(|(p, e)| {
            e.input_type().as_deref() == Some("radio") && e.attr("name") == Some(name) && form_owner(doc, p) == owner
        })
        .map(|(p, _)| p)
        .collect()
}

fn form_owner(doc: &HtmlDocument, path: &[usize]) -> Option<NodePath> {
    (0..path.len()).rev().map(|n| &path[..n]).find(|p| doc.element(p).is_some_and(|e| e.tag == "form")).map(|p| p.to_vec())
}

/// Fields inside `scope` that fail validation, given a lookup of each field's current value.
pub fn invalid_fields(
    doc: &HtmlDocument,
    scope: &[usize],
    mut value_of: impl FnMut(&FieldDescriptor) -> Result<String, BrowserError>,
) -> Result<Vec<(FieldDescriptor, Violation)>, BrowserError> {
    let mut out = Vec::new();
    for field in fields_in(doc, scope) {
        if !field.visible || !field.enabled || field.control == ControlType::Hidden {
            continue;
        }
        let value = value_of(&field)?;
        let verdict = if value.is_empty() {
            if field.required.is_required() { Err(Violation::ValueMissing) } else { Ok(()) }
        } else if field.control == ControlType::File {
            Ok(())
        } else {
            constraints::validate(field.control, &field.constraints, &value)
        };
        if let Err(v) = verdict {
            out.push((field, v));
        }
    }
    Ok(out)
}

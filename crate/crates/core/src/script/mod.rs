//! Form test scripts: one per explored state, as a neutral command list.

mod fill;
mod render;
mod run;

pub use fill::{fill_prompt, generate_fill_value, parse_fill_response, rules_value, FillError, FillMode, FillSource, DEFAULT_UPLOAD_PATH};
pub use render::{parse_native, render_script, Dialect, RenderError};
pub use run::{run_script, AssertionOutcome, FailReason, FormRun, InteractionRecord, Outcome, RunResults, ScriptRun, RUN_RESULTS_VERSION};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::browser::Action;
use crate::dom::{ControlType, ElementRef};
use crate::explore::{Interaction, StateGraph};
use crate::llm::LanguageModel;

pub const TEST_SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TestCommand {
    Navigate {
        url: String,
    },
    Click {
        #[serde(rename = "ref")]
        locator: ElementRef,
    },
    SetValue {
        #[serde(rename = "ref")]
        locator: ElementRef,
        value: String,
        control: ControlType,
    },
    SelectOption {
        #[serde(rename = "ref")]
        locator: ElementRef,
        value: String,
        control: ControlType,
    },
    Toggle {
        #[serde(rename = "ref")]
        locator: ElementRef,
        control: ControlType,
    },
    AssertVisible {
        #[serde(rename = "ref")]
        locator: ElementRef,
    },
    Submit {
        #[serde(rename = "ref")]
        locator: ElementRef,
    },
    AssertNoValidationError,
}

impl TestCommand {
    /// The field a command changes, with its control type.
    pub fn touched_field(&self) -> Option<(&ElementRef, ControlType)> {
        match self {
            TestCommand::SetValue { locator, control, .. }
            | TestCommand::SelectOption { locator, control, .. }
            | TestCommand::Toggle { locator, control } => Some((locator, *control)),
            _ => None,
        }
    }

    fn from_action(locator: ElementRef, action: &Action, control: ControlType) -> TestCommand {
        match action {
            Action::Click => TestCommand::Click { locator },
            Action::SetValue(value) => TestCommand::SetValue { locator, value: value.clone(), control },
            Action::SelectOption(value) => TestCommand::SelectOption { locator, value: value.clone(), control },
            Action::Toggle => TestCommand::Toggle { locator, control },
            Action::Submit => TestCommand::Submit { locator },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedField {
    #[serde(rename = "ref")]
    pub locator: ElementRef,
    pub control: ControlType,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub page_url: String,
    pub mode: FillMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Fields whose model answer was replaced by the rules value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub llm_fallback: Vec<ElementRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedField>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestScript {
    pub version: u32,
    pub id: String,
    pub target_state: usize,
    /// Form the script fills and submits.
    pub form: ElementRef,
    pub commands: Vec<TestCommand>,
    pub provenance: Provenance,
}

impl TestScript {
    /// Number of leading commands after `navigate` that replay the state path.
    pub fn replay_len(&self, graph: &StateGraph) -> usize {
        graph.state(self.target_state).map(|s| s.path_from_root.len()).unwrap_or(0)
    }
}

/// How fill values are produced.
pub struct Filler<'a> {
    pub mode: FillMode,
    pub llm: Option<&'a mut dyn LanguageModel>,
    pub upload_path: String,
}

impl Default for Filler<'_> {
    fn default() -> Self {
        Filler { mode: FillMode::Rules, llm: None, upload_path: DEFAULT_UPLOAD_PATH.into() }
    }
}

impl<'a> Filler<'a> {
    pub fn llm(llm: &'a mut dyn LanguageModel) -> Self {
        Filler { mode: FillMode::Llm, llm: Some(llm), upload_path: DEFAULT_UPLOAD_PATH.into() }
    }
}

fn interaction_control(controls: &BTreeMap<&ElementRef, ControlType>, interaction: &Interaction) -> ControlType {
    controls.get(&interaction.locator).copied().unwrap_or(match interaction.action {
        Action::SelectOption(_) => ControlType::Select,
        Action::Toggle => ControlType::Checkbox,
        _ => ControlType::Text,
    })
}

/// One script per state: navigate, replay the state's path, fill every visible field the path
/// did not touch, submit and assert that nothing failed validation.
pub fn plan_state_scripts(graph: &StateGraph, page_url: Option<&str>, filler: &mut Filler<'_>) -> Vec<TestScript> {
    let url = page_url.unwrap_or(&graph.page_url);
    let controls: BTreeMap<&ElementRef, ControlType> =
        graph.states.iter().flat_map(|s| s.visible_fields.iter().map(|f| (&f.locator, f.control))).collect();
    let model = filler.llm.as_ref().filter(|_| filler.mode == FillMode::Llm).map(|m| String::from(m.model_id()));
    let mut scripts = Vec::with_capacity(graph.states.len());
    for state in &graph.states {
        let mut commands = alloc::vec![TestCommand::Navigate { url: url.into() }];
        let mut touched: BTreeSet<&ElementRef> = BTreeSet::new();
        for step in &state.path_from_root {
            touched.insert(&step.locator);
            commands.push(TestCommand::from_action(step.locator.clone(), &step.action, interaction_control(&controls, step)));
        }
        let mut provenance = Provenance { page_url: url.into(), mode: filler.mode, model: model.clone(), llm_fallback: Vec::new(), skipped: Vec::new() };
        for field in &state.visible_fields {
            if !field.visible || !field.enabled || field.control == ControlType::Hidden || touched.contains(&field.locator) {
                continue;
            }
            match generate_fill_value(field, filler.mode, filler.llm.as_deref_mut(), &filler.upload_path) {
                Ok((action, source)) => {
                    if source == FillSource::LlmFallback {
                        provenance.llm_fallback.push(field.locator.clone());
                    }
                    commands.push(TestCommand::from_action(field.locator.clone(), &action, field.control));
                }
                Err(FillError::UnsupportedField { reason, .. }) => {
                    provenance.skipped.push(SkippedField { locator: field.locator.clone(), control: field.control, reason });
                }
            }
        }
        commands.push(TestCommand::Submit { locator: graph.form.clone() });
        commands.push(TestCommand::AssertNoValidationError);
        scripts.push(TestScript {
            version: TEST_SCRIPT_VERSION,
            id: format!("state-{}", state.id),
            target_state: state.id,
            form: graph.form.clone(),
            commands,
            provenance,
        });
    }
    scripts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::browser::{GroundTruth, ReactionManifest, Rule, SimulatorSession, SiteBundle, Condition, Effect, Visibility};
    use crate::explore::{explore, ExploreLimits};
    use alloc::sync::Arc;
    use alloc::vec;

    pub(super) const NESTED: &str = r#"<form id="f" action="/done"><select id="t" name="t"><option value="A">A</option><option value="B">B</option></select>
        <div id="a"><input name="x" required></div>
        <div id="b" style="display:none"><select id="u" name="u"><option value="1">1</option><option value="2">2</option></select>
          <div id="b1"><input type="email" name="y" required></div><div id="b2" style="display:none"><input type="number" name="z" min="5" max="9"></div></div>
        <input type="checkbox" name="agree" required><input type="hidden" name="token" value="t"><button id="go">Go</button></form>"#;

    pub(super) fn site(html: &str) -> SimulatorSession {
        let rule = |trigger: &str, value: &str, show: &str, hide: &str| Rule {
            trigger: ElementRef::id(trigger),
            condition: Condition::ValueEquals { value: value.into() },
            effects: vec![Effect { target: show.into(), visibility: Visibility::Show }, Effect { target: hide.into(), visibility: Visibility::Hide }],
        };
        let mut b = SiteBundle::new("http://sim.test");
        b.add_page("/f", html);
        b.add_page("/done", "<p>thanks</p>");
        b.add_manifest(
            "/f",
            ReactionManifest {
                version: 1,
                form_id: "f".into(),
                rules: vec![rule("t", "A", "a", "b"), rule("t", "B", "b", "a"), rule("u", "1", "b1", "b2"), rule("u", "2", "b2", "b1")],
                initial_visible: Vec::new(),
                regions: Vec::new(),
                buttons: Vec::new(),
                ground_truth: GroundTruth { fields: Vec::new(), state_count: 3 },
            },
        );
        SimulatorSession::new(Arc::new(b))
    }

    pub(super) fn nested_graph() -> (SimulatorSession, StateGraph) {
        let mut s = site(NESTED);
        let g = explore(&mut s, "/f", &ElementRef::id("f"), ExploreLimits::default()).unwrap();
        (s, g)
    }

    #[test]
    fn one_script_per_state_with_replay_prefix() {
        let (_, g) = nested_graph();
        assert_eq!(g.states.len(), 3);
        let scripts = plan_state_scripts(&g, None, &mut Filler::default());
        assert_eq!(scripts.len(), 3);
        for (script, state) in scripts.iter().zip(&g.states) {
            assert_eq!(script.commands[0], TestCommand::Navigate { url: "http://sim.test/f".into() });
            let n = state.path_from_root.len();
            let prefix: Vec<(ElementRef, Action)> = script.commands[1..=n]
                .iter()
                .map(|c| match c {
                    TestCommand::SelectOption { locator, value, .. } => (locator.clone(), Action::SelectOption(value.clone())),
                    TestCommand::Toggle { locator, .. } => (locator.clone(), Action::Toggle),
                    TestCommand::Click { locator } => (locator.clone(), Action::Click),
                    other => panic!("unexpected {:?}", other),
                })
                .collect();
            let path: Vec<(ElementRef, Action)> = state.path_from_root.iter().map(|i| (i.locator.clone(), i.action.clone())).collect();
            assert_eq!(prefix, path);
            let tail = &script.commands[script.commands.len() - 2..];
            assert_eq!(tail, [TestCommand::Submit { locator: ElementRef::id("f") }, TestCommand::AssertNoValidationError]);
            assert!(!script.commands.iter().any(|c| matches!(c.touched_field(), Some((l, _)) if l == &ElementRef::name("token"))));
        }
    }

    #[test]
    fn empty_graph_gives_no_scripts() {
        let (_, mut g) = nested_graph();
        g.states.clear();
        assert!(plan_state_scripts(&g, None, &mut Filler::default()).is_empty());
    }
}

//! Navigation test scenarios: shortest path, per-edge action text, and assembly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::llm::{fill_template, LanguageModel, Message};
use crate::site::url::canonicalize;
use crate::site::{shortest_path, NavEdge, NodeId, PathError, TransitionGraph};

pub const SCENARIO_VERSION: u32 = 1;

/// Prompt used for action generation. Lines up to and including `---` are comments.
pub const NAV_ACTION_PROMPT: &str = include_str!("../../../prompts/nav-action.txt");

/// A page given either by node id or by URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Node(NodeId),
    Url(String),
}

impl core::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Endpoint::Node(id) => write!(f, "node {}", id),
            Endpoint::Url(u) => f.write_str(u),
        }
    }
}

impl Endpoint {
    /// Digits are read as a node id, anything else as a URL.
    pub fn parse(s: &str) -> Endpoint {
        match s.trim().parse::<NodeId>() {
            Ok(id) => Endpoint::Node(id),
            Err(_) => Endpoint::Url(s.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRequest {
    pub start: Endpoint,
    pub destination: Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSource {
    Llm,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub index: usize,
    pub action: String,
    pub expected: String,
    pub edge: NavEdge,
    pub source: StepSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Llm { model: String, fallback_steps: usize },
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationScenario {
    pub version: u32,
    pub request: TestRequest,
    pub start_id: NodeId,
    pub destination_id: NodeId,
    pub steps: Vec<ScenarioStep>,
    pub generator: Generator,
    /// Start and destination are the same page.
    pub trivially_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown page {0}")]
    UnknownNode(String),
    #[error("destination {dest} is unreachable from {start}")]
    Unreachable { start: NodeId, dest: NodeId },
    #[error("{path} edges but {actions} actions")]
    LengthMismatch { path: usize, actions: usize },
    #[error("step {0} does not start where the previous step ended")]
    ChainViolation(usize),
}

/// Text for one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionText {
    pub action: String,
    pub expected: String,
    pub source: StepSource,
}

/// Titles and optional HTML of the two pages an edge connects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeContext {
    pub source_title: String,
    pub source_url: String,
    pub target_title: String,
    pub target_url: String,
    pub source_html: Option<String>,
}

impl EdgeContext {
    pub fn for_edge(graph: &TransitionGraph, edge: &NavEdge) -> Self {
        let (src, dst) = (graph.node(edge.source), graph.node(edge.target));
        EdgeContext {
            source_title: src.map(|n| n.display_name().to_string()).unwrap_or_default(),
            source_url: src.map(|n| n.url.clone()).unwrap_or_default(),
            target_title: dst.map(|n| n.display_name().to_string()).unwrap_or_default(),
            target_url: dst.map(|n| n.url.clone()).unwrap_or_default(),
            source_html: None,
        }
    }
}

pub fn resolve_endpoint(graph: &TransitionGraph, endpoint: &Endpoint) -> Result<NodeId, ScenarioError> {
    match endpoint {
        Endpoint::Node(id) => graph.node(*id).map(|n| n.id).ok_or_else(|| ScenarioError::UnknownNode(format!("{}", id))),
        Endpoint::Url(u) => {
            let base = graph.node(graph.start_id).map(|n| n.url.clone());
            let canonical = canonicalize(u, base.as_deref()).unwrap_or_else(|_| u.clone());
            graph
                .node_by_url(&canonical)
                .or_else(|| graph.node_by_url(u))
                .map(|n| n.id)
                .ok_or_else(|| ScenarioError::UnknownNode(u.clone()))
        }
    }
}

/// Shortest path for a request, with its resolved endpoints.
pub fn identify_path(graph: &TransitionGraph, request: &TestRequest) -> Result<(NodeId, NodeId, Vec<NavEdge>), ScenarioError> {
    let start = resolve_endpoint(graph, &request.start)?;
    let dest = resolve_endpoint(graph, &request.destination)?;
    match shortest_path(graph, start, dest) {
        Ok(path) => Ok((start, dest, path)),
        Err(PathError::NoPath { start, dest }) => Err(ScenarioError::Unreachable { start, dest }),
        Err(PathError::UnknownNode(id)) => Err(ScenarioError::UnknownNode(format!("{}", id))),
    }
}

pub fn fallback_action(edge: &NavEdge, context: &EdgeContext) -> ActionText {
    let kind = edge.affordance.kind.as_str();
    let action = if edge.affordance.label.is_empty() {
        format!("Click the {} located by '{}'", kind, edge.affordance.locator.value)
    } else {
        format!("Click the {} labeled '{}'", kind, edge.affordance.label)
    };
    let target = if context.target_title.is_empty() { &context.target_url } else { &context.target_title };
    ActionText { action, expected: format!("The page '{}' is displayed", target), source: StepSource::Fallback }
}

/// Prompt text with comment lines removed and placeholders filled.
pub fn render_prompt(template: &str, edge: &NavEdge, context: &EdgeContext) -> String {
    let body = match template.find("\n---\n") {
        Some(i) if template.starts_with('#') => &template[i + 5..],
        _ => template,
    };
    let html = context.source_html.as_ref().map(|h| format!("\nHTML of the current page:\n{}\n", h)).unwrap_or_default();
    let selector = edge.affordance.locator.to_string();
    fill_template(
        body,
        &[
            ("source_title", &context.source_title),
            ("source_url", &context.source_url),
            ("target_title", &context.target_title),
            ("target_url", &context.target_url),
            ("kind", edge.affordance.kind.as_str()),
            ("label", &edge.affordance.label),
            ("selector", &selector),
            ("html", &html),
        ],
    )
}

/// Split a completion into action and expected text. Completions without the two labeled lines
/// are taken verbatim as the action.
pub fn parse_completion(text: &str) -> (String, Option<String>) {
    let mut action = None;
    let mut expected = None;
    for line in text.lines() {
        let line = line.trim();
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("action:") && action.is_none() {
            action = Some(line[7..].trim().to_string());
        } else if lower.starts_with("expected:") && expected.is_none() {
            expected = Some(line[9..].trim().to_string());
        }
    }
    match (action, expected) {
        (Some(a), Some(e)) if !a.is_empty() && !e.is_empty() => (a, Some(e)),
        _ => (text.trim().to_string(), None),
    }
}

/// Action text from the model, falling back to the template when the model is absent, fails,
/// or returns nothing usable.
pub fn generate_action(
    edge: &NavEdge,
    context: &EdgeContext,
    llm: Option<&mut dyn LanguageModel>,
    template: &str,
) -> ActionText {
    let fallback = fallback_action(edge, context);
    let Some(llm) = llm else { return fallback };
    let prompt = render_prompt(template, edge, context);
    match llm.complete(&[Message::user(prompt)]) {
        Ok(c) => {
            let (action, expected) = parse_completion(&c.text);
            if action.is_empty() {
                return fallback;
            }
            ActionText { action, expected: expected.unwrap_or(fallback.expected), source: StepSource::Llm }
        }
        Err(_) => fallback,
    }
}

pub fn construct_scenario(
    request: TestRequest,
    start: NodeId,
    dest: NodeId,
    path: Vec<NavEdge>,
    actions: Vec<ActionText>,
    model: Option<&str>,
) -> Result<NavigationScenario, ScenarioError> {
    if path.len() != actions.len() {
        return Err(ScenarioError::LengthMismatch { path: path.len(), actions: actions.len() });
    }
    let fallback_steps = actions.iter().filter(|a| a.source == StepSource::Fallback).count();
    let steps: Vec<ScenarioStep> = path
        .into_iter()
        .zip(actions)
        .enumerate()
        .map(|(i, (edge, a))| ScenarioStep { index: i + 1, action: a.action, expected: a.expected, edge, source: a.source })
        .collect();
    let scenario = NavigationScenario {
        version: SCENARIO_VERSION,
        request,
        start_id: start,
        destination_id: dest,
        trivially_satisfied: steps.is_empty() && start == dest,
        steps,
        generator: match model {
            Some(m) => Generator::Llm { model: m.to_string(), fallback_steps },
            None => Generator::Fallback,
        },
    };
    check_chain(&scenario)?;
    Ok(scenario)
}

/// Steps are contiguous, start at the start node and end at the destination.
pub fn check_chain(scenario: &NavigationScenario) -> Result<(), ScenarioError> {
    let mut at = scenario.start_id;
    for (i, step) in scenario.steps.iter().enumerate() {
        if step.edge.source != at || step.index != i + 1 || step.expected.is_empty() {
            return Err(ScenarioError::ChainViolation(i + 1));
        }
        at = step.edge.target;
    }
    if at != scenario.destination_id {
        return Err(ScenarioError::ChainViolation(scenario.steps.len()));
    }
    Ok(())
}

/// Identify the path and write one step per edge.
pub fn generate_scenario(
    graph: &TransitionGraph,
    request: &TestRequest,
    mut llm: Option<&mut dyn LanguageModel>,
    template: &str,
) -> Result<NavigationScenario, ScenarioError> {
    let (start, dest, path) = identify_path(graph, request)?;
    let model = llm.as_ref().map(|m| m.model_id().to_string());
    let mut actions = Vec::with_capacity(path.len());
    for edge in &path {
        let context = EdgeContext::for_edge(graph, edge);
        let model: Option<&mut dyn LanguageModel> = match llm {
            Some(ref mut m) => Some(&mut **m),
            None => None,
        };
        actions.push(generate_action(edge, &context, model, template));
    }
    construct_scenario(request.clone(), start, dest, path, actions, model.as_deref())
}

pub fn render_markdown(scenario: &NavigationScenario, graph: &TransitionGraph) -> String {
    let name = |id: NodeId| graph.node(id).map(|n| n.display_name().to_string()).unwrap_or_else(|| format!("node {}", id));
    let mut out = format!("# Navigation scenario: {} to {}\n\n", name(scenario.start_id), name(scenario.destination_id));
    match &scenario.generator {
        Generator::Llm { model, fallback_steps } => {
            out.push_str(&format!("Generated with `{}` ({} fallback steps).\n\n", model, fallback_steps))
        }
        Generator::Fallback => out.push_str("Generated with the built-in template.\n\n"),
    }
    if scenario.steps.is_empty() {
        out.push_str("The start page is the destination; no steps are needed.\n");
        return out;
    }
    out.push_str("| # | Action | Expected result |\n|---|---|---|\n");
    for s in &scenario.steps {
        let cell = |t: &str| t.replace('|', "\\|").replace('\n', " ");
        out.push_str(&format!("| {} | {} | {} |\n", s.index, cell(&s.action), cell(&s.expected)));
    }
    out
}

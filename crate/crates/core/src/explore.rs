//! Form state exploration.
//!
//! Depth-first search over the configurations of one form. At each state every probe
//! (select and radio options, checkbox toggles, `type=button` clicks) is applied and the form
//! fingerprint compared before and after. A new fingerprint becomes a state, reached by the
//! parent's interaction path plus the probe, and is explored recursively. The session is then
//! brought back to the parent state by reloading the page and replaying the parent's path.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::browser::{Action, BrowserError, Session};
use crate::dom::{
    emit_ref, fields_in, fingerprint, interactable_paths, parse_document, resolve_scope, ControlType, DomError,
    ElementRef, FieldDescriptor, HtmlDocument, StateFingerprint,
};

pub const STATE_GRAPH_VERSION: u32 = 1;

/// A state-probing interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    #[serde(rename = "ref")]
    pub locator: ElementRef,
    pub action: Action,
    pub label: String,
}

impl Interaction {
    /// Whether applying the interaction changes a control value.
    pub fn mutates_values(&self) -> bool {
        !matches!(self.action, Action::Click)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormState {
    pub id: usize,
    pub fingerprint: StateFingerprint,
    pub visible_fields: Vec<FieldDescriptor>,
    pub path_from_root: Vec<Interaction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEdge {
    pub from: usize,
    pub to: usize,
    pub interaction: Interaction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub state: usize,
    pub interaction: Interaction,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreDiagnostics {
    pub probes: usize,
    /// Restores whose resulting fingerprint was compared with the recorded one.
    pub restore_checks: usize,
    /// Restores that did not reproduce the recorded fingerprint.
    pub restore_violations: Vec<String>,
    pub failed_probes: Vec<ProbeFailure>,
    /// Probes that navigated away from the page.
    pub navigations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateGraph {
    pub version: u32,
    pub page_url: String,
    pub form: ElementRef,
    pub states: Vec<FormState>,
    pub edges: Vec<StateEdge>,
    pub root_id: usize,
    /// Set when a limit stopped exploration before every probe was tried.
    pub truncated: bool,
    #[serde(default)]
    pub diagnostics: ExploreDiagnostics,
}

impl StateGraph {
    pub fn state(&self, id: usize) -> Option<&FormState> {
        self.states.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreLimits {
    pub max_states: usize,
    pub max_depth: usize,
    /// Compare the fingerprint after every restore with the recorded state.
    #[serde(default = "default_true")]
    pub check_restores: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits { max_states: 64, max_depth: 8, check_restores: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("page {url} could not be loaded: {source}")]
    PageLoad { url: String, source: BrowserError },
    #[error("form not found: {0}")]
    FormNotFound(String),
    #[error("replay diverged: expected {expected}, got {actual}")]
    ReplayDiverged { expected: String, actual: String },
    #[error("replay failed at step {step}: {source}")]
    ReplayFailed { step: usize, source: BrowserError },
    #[error(transparent)]
    Browser(#[from] BrowserError),
}

fn current_doc<S: Session + ?Sized>(session: &mut S) -> Result<HtmlDocument, ExploreError> {
    Ok(parse_document(&session.page_source()?))
}

fn form_fingerprint(doc: &HtmlDocument, scope: &ElementRef) -> Result<StateFingerprint, ExploreError> {
    fingerprint(doc, scope).map_err(|e: DomError| ExploreError::FormNotFound(e.to_string()))
}

/// Reload `page_url` and replay `path`. When `expected` is given, the resulting fingerprint must
/// match it.
pub fn restore_state<S: Session + ?Sized>(
    session: &mut S,
    page_url: &str,
    scope: &ElementRef,
    path: &[Interaction],
    expected: Option<&StateFingerprint>,
) -> Result<StateFingerprint, ExploreError> {
    session
        .navigate(page_url)
        .map_err(|source| ExploreError::PageLoad { url: page_url.to_string(), source })?;
    for (step, interaction) in path.iter().enumerate() {
        session
            .interact(&interaction.locator, &interaction.action)
            .map_err(|source| ExploreError::ReplayFailed { step, source })?;
    }
    let fp = form_fingerprint(&current_doc(session)?, scope)?;
    if let Some(expected) = expected {
        if *expected != fp {
            return Err(ExploreError::ReplayDiverged { expected: expected.digest.clone(), actual: fp.digest });
        }
    }
    Ok(fp)
}

/// Probes available in the current configuration of the form at `scope`, in document order.
pub fn probes(doc: &HtmlDocument, scope: &[usize]) -> Vec<Interaction> {
    let fields = fields_in(doc, scope);
    let mut out = Vec::new();
    for path in interactable_paths(doc, scope) {
        let Some(el) = doc.element(&path) else { continue };
        let locator = emit_ref(doc, &path);
        let field = fields.iter().find(|f| f.locator == locator);
        let desc = field.map(|f| if f.name.is_empty() { locator.label() } else { f.name.clone() }).unwrap_or_else(|| locator.label());
        match ControlType::of_element(el) {
            Some(ControlType::Select) => {
                for v in field.map(|f| f.options.clone()).unwrap_or_default() {
                    out.push(Interaction { locator: locator.clone(), label: format!("select {:?} in {}", v, desc), action: Action::SelectOption(v) });
                }
            }
            // Radio groups are probed once, through the descriptor of their first button.
            Some(ControlType::Radio) => {
                if let Some(f) = field {
                    for v in &f.options {
                        out.push(Interaction { locator: locator.clone(), label: format!("choose {:?} for {}", v, desc), action: Action::SelectOption(v.clone()) });
                    }
                }
            }
            Some(ControlType::Checkbox) => {
                out.push(Interaction { locator, label: format!("toggle {}", desc), action: Action::Toggle });
            }
            Some(_) => {}
            None => {
                let is_plain_button = el.tag == "button" && el.attr("type").map(|t| t.trim().eq_ignore_ascii_case("button")).unwrap_or(false)
                    || el.input_type().as_deref() == Some("button");
                if is_plain_button {
                    let text = el.normalized_text();
                    let name = if text.is_empty() { el.attr("value").unwrap_or("").to_string() } else { text };
                    let name = if name.is_empty() { locator.label() } else { name };
                    out.push(Interaction { locator, label: format!("click button {:?}", name), action: Action::Click });
                }
            }
        }
    }
    out
}

struct Explorer<'a, S: Session + ?Sized> {
    session: &'a mut S,
    page_url: String,
    scope: ElementRef,
    limits: ExploreLimits,
    graph: StateGraph,
    seen: BTreeMap<String, usize>,
}

impl<S: Session + ?Sized> Explorer<'_, S> {
    /// Bring the session back to `state`. Returns false when the replay did not reproduce it.
    fn restore(&mut self, state: usize) -> Result<bool, ExploreError> {
        let recorded = self.graph.states[state].clone();
        let expected = self.limits.check_restores.then_some(&recorded.fingerprint);
        match restore_state(self.session, &self.page_url, &self.scope, &recorded.path_from_root, expected) {
            Ok(_) => {
                if self.limits.check_restores {
                    self.graph.diagnostics.restore_checks += 1;
                }
                Ok(true)
            }
            Err(e @ (ExploreError::ReplayDiverged { .. } | ExploreError::ReplayFailed { .. })) => {
                self.graph.diagnostics.restore_checks += 1;
                self.graph.diagnostics.restore_violations.push(format!("state {}: {}", state, e));
                Ok(false)
            }
            Err(e) => Err(e),
        }
    }

    fn explore_state(&mut self, state: usize, depth: usize) -> Result<(), ExploreError> {
        let doc = current_doc(self.session)?;
        let scope_path = resolve_scope(&doc, &self.scope).map_err(|e| ExploreError::FormNotFound(e.to_string()))?;
        let old = self.graph.states[state].fingerprint.clone();
        for probe in probes(&doc, &scope_path) {
            if self.graph.truncated && self.graph.states.len() >= self.limits.max_states {
                break;
            }
            self.graph.diagnostics.probes += 1;
            if let Err(e) = self.session.interact(&probe.locator, &probe.action) {
                if e.is_fatal() {
                    return Err(e.into());
                }
                self.graph.diagnostics.failed_probes.push(ProbeFailure { state, interaction: probe, error: e.to_string() });
                if !self.restore(state)? {
                    return Ok(());
                }
                continue;
            }
            if self.session.current_url()? != self.page_url {
                self.graph.diagnostics.navigations += 1;
                if !self.restore(state)? {
                    return Ok(());
                }
                continue;
            }
            let after = current_doc(self.session)?;
            let new = form_fingerprint(&after, &self.scope)?;
            if new == old {
                if probe.mutates_values() && !self.restore(state)? {
                    return Ok(());
                }
                continue;
            }
            match self.seen.get(&new.digest).copied() {
                Some(existing) => {
                    self.add_edge(state, existing, probe);
                }
                None if self.graph.states.len() >= self.limits.max_states => {
                    self.graph.truncated = true;
                }
                None => {
                    let id = self.graph.states.len();
                    let mut path = self.graph.states[state].path_from_root.clone();
                    path.push(probe.clone());
                    let visible = fields_of(&after, &self.scope);
                    self.seen.insert(new.digest.clone(), id);
                    self.graph.states.push(FormState { id, fingerprint: new, visible_fields: visible, path_from_root: path });
                    self.add_edge(state, id, probe);
                    if depth + 1 < self.limits.max_depth {
                        self.explore_state(id, depth + 1)?;
                    } else {
                        self.graph.truncated = true;
                    }
                }
            }
            if !self.restore(state)? {
                return Ok(());
            }
        }
        Ok(())
    }

    fn add_edge(&mut self, from: usize, to: usize, interaction: Interaction) {
        let duplicate = self.graph.edges.iter().any(|e| e.from == from && e.to == to && e.interaction == interaction);
        if !duplicate {
            self.graph.edges.push(StateEdge { from, to, interaction });
        }
    }
}

fn fields_of(doc: &HtmlDocument, scope: &ElementRef) -> Vec<FieldDescriptor> {
    match resolve_scope(doc, scope) {
        Ok(p) => fields_in(doc, &p).into_iter().filter(|f| f.visible).collect(),
        Err(_) => Vec::new(),
    }
}

/// Explore the form at `scope` on `page_url`.
pub fn explore<S: Session + ?Sized>(
    session: &mut S,
    page_url: &str,
    scope: &ElementRef,
    limits: ExploreLimits,
) -> Result<StateGraph, ExploreError> {
    session
        .navigate(page_url)
        .map_err(|source| ExploreError::PageLoad { url: page_url.to_string(), source })?;
    let page_url = session.current_url()?;
    let doc = current_doc(session)?;
    let root_fp = form_fingerprint(&doc, scope)?;
    let root = FormState { id: 0, fingerprint: root_fp.clone(), visible_fields: fields_of(&doc, scope), path_from_root: Vec::new() };
    let graph = StateGraph {
        version: STATE_GRAPH_VERSION,
        page_url: page_url.clone(),
        form: scope.clone(),
        states: alloc::vec![root],
        edges: Vec::new(),
        root_id: 0,
        truncated: false,
        diagnostics: ExploreDiagnostics::default(),
    };
    let mut seen = BTreeMap::new();
    seen.insert(root_fp.digest, 0);
    let mut explorer = Explorer { session, page_url, scope: scope.clone(), limits, graph, seen };
    if limits.max_depth > 0 && limits.max_states > 1 {
        explorer.explore_state(0, 0)?;
    } else {
        explorer.graph.truncated = true;
    }
    Ok(explorer.graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::browser::{Condition, Effect, GroundTruth, ReactionManifest, Rule, SimulatorSession, SiteBundle, Visibility};
    use alloc::sync::Arc;
    use alloc::vec;

    fn rule(trigger: &str, value: &str, show: &[&str], hide: &[&str]) -> Rule {
        let mut effects: Vec<Effect> = show.iter().map(|t| Effect { target: (*t).into(), visibility: Visibility::Show }).collect();
        effects.extend(hide.iter().map(|t| Effect { target: (*t).into(), visibility: Visibility::Hide }));
        Rule { trigger: ElementRef::id(trigger), condition: Condition::ValueEquals { value: value.into() }, effects }
    }

    fn session(html: &str, rules: Vec<Rule>) -> SimulatorSession {
        let mut b = SiteBundle::new("http://sim.test");
        b.add_page("/f", html);
        let manifest = ReactionManifest {
            version: 1,
            form_id: "f".into(),
            rules,
            initial_visible: Vec::new(),
            regions: Vec::new(),
            buttons: Vec::new(),
            ground_truth: GroundTruth { fields: Vec::new(), state_count: 0 },
        };
        b.add_manifest("/f", manifest);
        SimulatorSession::new(Arc::new(b))
    }

    #[test]
    fn simple_form_has_one_state() {
        let mut s = session(r#"<form id="f"><input name="a"><input type="checkbox" name="c"><select name="s"><option>1<option>2</select></form>"#, vec![]);
        let g = explore(&mut s, "/f", &ElementRef::id("f"), ExploreLimits::default()).unwrap();
        assert_eq!((g.states.len(), g.edges.len()), (1, 0));
        assert!(!g.truncated);
    }

    const NESTED: &str = r#"<form id="f"><select id="t"><option value="A">A</option><option value="B">B</option></select>
        <div id="a"><input name="x"></div>
        <div id="b" style="display:none"><select id="u"><option value="1">1</option><option value="2">2</option></select>
          <div id="b1"><input name="y"></div><div id="b2" style="display:none"><input name="z"></div></div></form>"#;

    fn nested_rules() -> Vec<Rule> {
        vec![
            rule("t", "A", &["a"], &["b"]),
            rule("t", "B", &["b"], &["a"]),
            rule("u", "1", &["b1"], &["b2"]),
            rule("u", "2", &["b2"], &["b1"]),
        ]
    }

    #[test]
    fn nested_triggers() {
        let mut s = session(NESTED, nested_rules());
        let g = explore(&mut s, "/f", &ElementRef::id("f"), ExploreLimits::default()).unwrap();
        assert_eq!(g.states.len(), 3);
        assert!(g.edges.len() >= g.states.len() - 1);
        assert!(g.diagnostics.restore_checks > 0);
        assert!(g.diagnostics.restore_violations.is_empty());
        let paths: Vec<usize> = g.states.iter().map(|s| s.path_from_root.len()).collect();
        assert_eq!(paths, [0, 1, 2]);
    }

    #[test]
    fn limits_truncate() {
        let mut s = session(NESTED, nested_rules());
        let limits = ExploreLimits { max_states: 2, ..Default::default() };
        let g = explore(&mut s, "/f", &ElementRef::id("f"), limits).unwrap();
        assert_eq!(g.states.len(), 2);
        assert!(g.truncated);
    }

    #[test]
    fn restore_replays_and_detects_divergence() {
        let mut s = session(NESTED, nested_rules());
        let g = explore(&mut s, "/f", &ElementRef::id("f"), ExploreLimits::default()).unwrap();
        let scope = ElementRef::id("f");
        let root = &g.states[0];
        assert_eq!(restore_state(&mut s, &g.page_url, &scope, &[], Some(&root.fingerprint)).unwrap(), root.fingerprint);
        let child = &g.states[1];
        restore_state(&mut s, &g.page_url, &scope, &child.path_from_root, Some(&child.fingerprint)).unwrap();

        s.bundle_mut().pages.insert(g.page_url.clone(), NESTED.replace(r#"<div id="b1">"#, r#"<div id="b1" class="changed">"#));
        let err = restore_state(&mut s, &g.page_url, &scope, &child.path_from_root, Some(&child.fingerprint)).unwrap_err();
        assert!(matches!(err, ExploreError::ReplayDiverged { .. }));
    }

    #[test]
    fn missing_form() {
        let mut s = session("<p>no form</p>", vec![]);
        assert!(matches!(explore(&mut s, "/f", &ElementRef::id("f"), ExploreLimits::default()), Err(ExploreError::FormNotFound(_))));
    }
}

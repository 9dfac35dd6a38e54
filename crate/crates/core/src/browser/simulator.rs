//! Deterministic in-process browser backed by a site bundle and reaction manifests.
//!
//! Pages are stored as HTML keyed by canonical URL. Dynamic behavior is limited to what the
//! manifests declare: rules that show or hide elements by toggling inline `display`. Hiding an
//! element clears the values of the controls inside it, and every value change re-evaluates the
//! rules, each rule firing at most once per interaction.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::manifest::{Condition, ReactionManifest, Rule, Visibility};
use super::{
    dom_value, invalid_fields, option_value, radio_group, Action, BackendKind, BrowserError, Session, SessionConfig,
};
use crate::constraints;
use crate::dom::{
    is_enabled, is_visible, parse_document, resolve_scope, style_declarations, ControlType, Element, ElementRef,
    FieldDescriptor, HtmlDocument, Node, NodePath,
};
use crate::site::url::canonicalize;

const MAX_REDIRECTS: usize = 10;

/// Pages, redirects and manifests served by the simulator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteBundle {
    pub origin: String,
    /// Canonical URL to HTML.
    pub pages: BTreeMap<String, String>,
    /// Canonical URL to redirect target.
    #[serde(default)]
    pub redirects: BTreeMap<String, String>,
    /// Canonical URL to the manifests of the forms on that page.
    #[serde(default)]
    pub manifests: BTreeMap<String, Vec<ReactionManifest>>,
}

impl SiteBundle {
    pub fn new(origin: &str) -> Self {
        let origin = canonicalize(origin, None).unwrap_or_else(|_| origin.to_string());
        SiteBundle { origin, ..Default::default() }
    }

    /// Canonical absolute URL for a path or URL relative to the origin.
    pub fn url(&self, path: &str) -> String {
        canonicalize(path, Some(&self.origin)).unwrap_or_else(|_| path.to_string())
    }

    pub fn add_page(&mut self, path: &str, html: impl Into<String>) -> String {
        let url = self.url(path);
        self.pages.insert(url.clone(), html.into());
        url
    }

    pub fn add_redirect(&mut self, from: &str, to: &str) {
        let (from, to) = (self.url(from), self.url(to));
        self.redirects.insert(from, to);
    }

    pub fn add_manifest(&mut self, path: &str, manifest: ReactionManifest) {
        let url = self.url(path);
        self.manifests.entry(url).or_default().push(manifest);
    }

    /// Follow redirects from a canonical URL to the page that serves it.
    pub fn resolve(&self, url: &str) -> Result<String, BrowserError> {
        let mut current = url.to_string();
        for _ in 0..=MAX_REDIRECTS {
            if let Some(next) = self.redirects.get(&current) {
                current = next.clone();
                continue;
            }
            return if self.pages.contains_key(&current) {
                Ok(current)
            } else {
                Err(BrowserError::PageNotFound(current))
            };
        }
        Err(BrowserError::PageNotFound(alloc::format!("{} (redirect loop)", url)))
    }
}

/// A form submitted without validation errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub page: String,
    pub action: Option<String>,
    pub values: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulatorStats {
    pub navigations: usize,
    pub interactions: usize,
    pub rule_firings: usize,
    /// Largest number of rule firings caused by a single interaction.
    pub max_firings_per_interaction: usize,
}

#[derive(Debug, Clone)]
pub struct SimulatorSession {
    bundle: Arc<SiteBundle>,
    config: SessionConfig,
    url: Option<String>,
    doc: Option<HtmlDocument>,
    rules: Vec<Rule>,
    stats: SimulatorStats,
    submissions: Vec<Submission>,
    closed: bool,
}

impl SimulatorSession {
    pub fn new(bundle: Arc<SiteBundle>) -> Self {
        Self::with_config(bundle, SessionConfig::default())
    }

    pub fn with_config(bundle: Arc<SiteBundle>, config: SessionConfig) -> Self {
        SimulatorSession {
            bundle,
            config,
            url: None,
            doc: None,
            rules: Vec::new(),
            stats: SimulatorStats::default(),
            submissions: Vec::new(),
            closed: false,
        }
    }

    pub fn bundle(&self) -> &SiteBundle {
        &self.bundle
    }

    /// Mutable access to the bundle; later navigations see the changes.
    pub fn bundle_mut(&mut self) -> &mut SiteBundle {
        Arc::make_mut(&mut self.bundle)
    }

    pub fn stats(&self) -> &SimulatorStats {
        &self.stats
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn document(&self) -> Option<&HtmlDocument> {
        self.doc.as_ref()
    }

    fn live(&self) -> Result<(), BrowserError> {
        if self.closed {
            Err(BrowserError::SessionLost("session closed".into()))
        } else {
            Ok(())
        }
    }

    fn doc_mut(&mut self) -> Result<&mut HtmlDocument, BrowserError> {
        self.doc.as_mut().ok_or(BrowserError::NoPage)
    }

    fn load(&mut self, url: &str) -> Result<(), BrowserError> {
        let page = self.bundle.resolve(url)?;
        let html = &self.bundle.pages[&page];
        self.doc = Some(parse_document(html));
        self.rules = self.bundle.manifests.get(&page).map(|ms| ms.iter().flat_map(|m| m.rules.clone()).collect()).unwrap_or_default();
        self.url = Some(page);
        self.stats.navigations += 1;
        Ok(())
    }

    fn set_value(&mut self, path: &[usize], value: &str) -> Result<(), BrowserError> {
        let doc = self.doc_mut()?;
        let el = doc.element_mut(path).ok_or(BrowserError::NoPage)?;
        let control = ControlType::of_element(el);
        match control {
            Some(ControlType::File) => {
                Err(BrowserError::ValueRejected("file inputs cannot be filled in the simulator".into()))
            }
            Some(c) if c.is_text_like() => {
                if !constraints::valid_syntax(c, value) {
                    return Err(BrowserError::ValueRejected(alloc::format!("{:?} is not a valid {} value", value, c)));
                }
                let value: String = match el.attr("maxlength").and_then(|m| m.trim().parse::<usize>().ok()) {
                    Some(max) => value.chars().take(max).collect(),
                    None => value.to_string(),
                };
                if c == ControlType::Textarea {
                    el.children = alloc::vec![Node::Text(value)];
                } else {
                    el.set_attr("value", value);
                }
                Ok(())
            }
            _ => Err(BrowserError::InvalidAction(alloc::format!("cannot set a value on <{}>", el.tag))),
        }
    }

    fn select_option(&mut self, path: &[usize], value: &str) -> Result<NodePath, BrowserError> {
        let doc = self.doc.as_ref().ok_or(BrowserError::NoPage)?;
        let el = doc.element(path).ok_or(BrowserError::NoPage)?;
        match ControlType::of_element(el) {
            Some(ControlType::Select) => {
                let options: Vec<(NodePath, String, String)> = el
                    .walk()
                    .into_iter()
                    .filter(|(_, e)| e.tag == "option")
                    .map(|(p, e)| (p, option_value(e), e.normalized_text()))
                    .collect();
                let chosen = options
                    .iter()
                    .position(|(_, v, _)| v == value)
                    .or_else(|| options.iter().position(|(_, _, t)| t == value))
                    .ok_or_else(|| BrowserError::ValueRejected(alloc::format!("no option {:?}", value)))?;
                let multiple = el.has_attr("multiple");
                let doc = self.doc_mut()?;
                for (i, (rel, _, _)) in options.iter().enumerate() {
                    let mut full = path.to_vec();
                    full.extend(rel);
                    let option = doc.element_mut(&full).ok_or(BrowserError::NoPage)?;
                    if i == chosen {
                        option.set_attr("selected", "");
                    } else if !multiple {
                        option.remove_attr("selected");
                    }
                }
                Ok(path.to_vec())
            }
            Some(ControlType::Radio) => {
                let group = radio_group(doc, path);
                let member = group
                    .iter()
                    .find(|p| doc.element(p).is_some_and(|e| e.attr("value").unwrap_or("on") == value))
                    .cloned()
                    .ok_or_else(|| BrowserError::ValueRejected(alloc::format!("no radio button {:?}", value)))?;
                if !is_visible(doc, &member) || !is_enabled(doc, &member) {
                    return Err(BrowserError::ElementNotInteractable(alloc::format!("radio button {:?}", value)));
                }
                self.check_radio(&member)?;
                Ok(member)
            }
            _ => Err(BrowserError::InvalidAction(alloc::format!("cannot select an option on <{}>", el.tag))),
        }
    }

    fn check_radio(&mut self, member: &[usize]) -> Result<(), BrowserError> {
        let group = radio_group(self.doc.as_ref().ok_or(BrowserError::NoPage)?, member);
        let doc = self.doc_mut()?;
        for p in group {
            let e = doc.element_mut(&p).ok_or(BrowserError::NoPage)?;
            if p == member {
                e.set_attr("checked", "");
            } else {
                e.remove_attr("checked");
            }
        }
        Ok(())
    }

    fn toggle(&mut self, path: &[usize]) -> Result<(), BrowserError> {
        let doc = self.doc.as_ref().ok_or(BrowserError::NoPage)?;
        let el = doc.element(path).ok_or(BrowserError::NoPage)?;
        match ControlType::of_element(el) {
            Some(ControlType::Checkbox) => {
                let checked = el.has_attr("checked");
                let el = self.doc_mut()?.element_mut(path).ok_or(BrowserError::NoPage)?;
                if checked {
                    el.remove_attr("checked");
                } else {
                    el.set_attr("checked", "");
                }
                Ok(())
            }
            Some(ControlType::Radio) => self.check_radio(path),
            _ => Err(BrowserError::InvalidAction(alloc::format!("cannot toggle <{}>", el.tag))),
        }
    }

    fn click(&mut self, path: &[usize]) -> Result<(), BrowserError> {
        let doc = self.doc.as_ref().ok_or(BrowserError::NoPage)?;
        let el = doc.element(path).ok_or(BrowserError::NoPage)?;
        match ControlType::of_element(el) {
            Some(ControlType::Checkbox | ControlType::Radio) => return self.toggle(path),
            Some(_) => return Ok(()),
            None => {}
        }
        let is_submit = match el.tag.as_str() {
            "button" => el.attr("type").map(|t| t.trim().to_ascii_lowercase()).is_none_or(|t| t == "submit"),
            "input" => matches!(el.input_type().as_deref(), Some("submit" | "image")),
            _ => false,
        };
        if is_submit {
            return self.submit(path);
        }
        if el.tag == "a" {
            if let Some(href) = el.attr("href").map(String::from) {
                let base = self.url.clone().unwrap_or_else(|| self.bundle.origin.clone());
                let target = canonicalize(&href, Some(&base)).map_err(|e| BrowserError::InvalidUrl(e.to_string()))?;
                if target == base && href.trim_start().starts_with('#') {
                    return Ok(());
                }
                return self.load(&target);
            }
        }
        Ok(())
    }

    fn submit(&mut self, path: &[usize]) -> Result<(), BrowserError> {
        let doc = self.doc.as_ref().ok_or(BrowserError::NoPage)?;
        let Some(form_path) = (0..=path.len()).rev().map(|n| path[..n].to_vec()).find(|p| doc.element(p).is_some_and(|e| e.tag == "form")) else {
            return Ok(());
        };
        if !invalid_fields(doc, &form_path, |f| Ok(self.value_of(f)))?.is_empty() {
            return Ok(());
        }
        let form = doc.element(&form_path).ok_or(BrowserError::NoPage)?;
        let mut values = Vec::new();
        for (rel, e) in form.walk() {
            let mut full = form_path.clone();
            full.extend(rel);
            if let (Some(name), Some(control)) = (e.attr("name"), ControlType::of_element(e)) {
                if control == ControlType::Radio && !e.has_attr("checked") {
                    continue;
                }
                let v = dom_value(doc, &full);
                if !(control == ControlType::Checkbox && v.is_empty()) {
                    values.push((name.to_string(), v));
                }
            }
        }
        let page = self.url.clone().unwrap_or_default();
        let action = form.attr("action").map(String::from);
        self.submissions.push(Submission { page: page.clone(), action: action.clone(), values });
        if let Some(action) = action.filter(|a| !a.trim().is_empty()) {
            if let Ok(target) = canonicalize(&action, Some(&page)) {
                if self.bundle.resolve(&target).is_ok() {
                    return self.load(&target);
                }
            }
        }
        Ok(())
    }

    fn value_of(&self, field: &FieldDescriptor) -> String {
        let Some(doc) = self.doc.as_ref() else { return String::new() };
        field.locator.resolve_one(doc).map(|p| dom_value(doc, &p)).unwrap_or_default()
    }

    /// Apply rules triggered by `changed` until no rule matches. Returns the number of firings.
    // Indexing keeps `self` free for the mutable borrows inside the loop.
    #[allow(clippy::needless_range_loop)]
    fn apply_rules(&mut self, changed: NodePath, clicked: bool) -> usize {
        let mut fired = alloc::vec![false; self.rules.len()];
        let mut queue: VecDeque<(NodePath, bool)> = VecDeque::new();
        queue.push_back((changed, clicked));
        let mut count = 0;
        while let Some((path, clicked)) = queue.pop_front() {
            for i in 0..self.rules.len() {
                if fired[i] {
                    continue;
                }
                let Some(doc) = self.doc.as_ref() else { return count };
                let rule = &self.rules[i];
                let Some(trigger) = rule.trigger.resolve_one(doc) else { continue };
                let related = trigger == path
                    || (doc.element(&path).and_then(|e| e.input_type()).as_deref() == Some("radio")
                        && radio_group(doc, &path).contains(&trigger));
                if !related {
                    continue;
                }
                let holds = match &rule.condition {
                    Condition::Clicked => clicked && trigger == path,
                    Condition::ValueEquals { value } => dom_value(doc, &trigger) == *value,
                    Condition::Checked => doc.element(&trigger).is_some_and(|e| e.has_attr("checked")),
                };
                if !holds {
                    continue;
                }
                fired[i] = true;
                count += 1;
                let effects = rule.effects.clone();
                for effect in effects {
                    let cleared = self.apply_effect(&effect.target, effect.visibility);
                    queue.extend(cleared.into_iter().map(|p| (p, false)));
                }
            }
        }
        count
    }

    /// Toggle the inline display of `target`. Hiding clears the controls inside it; the paths of
    /// controls whose value changed are returned.
    fn apply_effect(&mut self, target: &str, visibility: Visibility) -> Vec<NodePath> {
        let Some(doc) = self.doc.as_mut() else { return Vec::new() };
        let Some(path) = doc.find_by_id(target) else { return Vec::new() };
        let Some(el) = doc.element_mut(&path) else { return Vec::new() };
        let mut decls: Vec<(String, String)> =
            style_declarations(el.attr("style").unwrap_or("")).into_iter().filter(|(n, _)| n != "display").collect();
        if visibility == Visibility::Hide {
            decls.push(("display".into(), "none".into()));
        }
        if decls.is_empty() {
            el.remove_attr("style");
        } else {
            let joined: Vec<String> = decls.iter().map(|(n, v)| alloc::format!("{}:{}", n, v)).collect();
            el.set_attr("style", joined.join(";"));
        }
        if visibility == Visibility::Show {
            return Vec::new();
        }
        let controls: Vec<NodePath> = el
            .walk()
            .into_iter()
            .filter(|(_, e)| ControlType::of_element(e).is_some())
            .map(|(rel, _)| {
                let mut full = path.clone();
                full.extend(rel);
                full
            })
            .collect();
        let mut changed = Vec::new();
        for p in controls {
            let before = dom_value(doc, &p);
            if let Some(e) = doc.element_mut(&p) {
                clear_control(e);
            }
            if dom_value(doc, &p) != before {
                changed.push(p);
            }
        }
        changed
    }
}

fn clear_control(el: &mut Element) {
    match ControlType::of_element(el) {
        Some(ControlType::Checkbox | ControlType::Radio) => {
            el.remove_attr("checked");
        }
        Some(ControlType::Select) => {
            let paths: Vec<NodePath> = el.walk().into_iter().filter(|(_, e)| e.tag == "option").map(|(p, _)| p).collect();
            for p in paths {
                if let Some(o) = el.descendant_mut(&p) {
                    o.remove_attr("selected");
                }
            }
        }
        Some(ControlType::Textarea) => el.children.clear(),
        Some(ControlType::Hidden) | None => {}
        Some(_) => {
            el.remove_attr("value");
        }
    }
}

impl Session for SimulatorSession {
    fn backend(&self) -> BackendKind {
        BackendKind::Simulator
    }

    fn config(&self) -> &SessionConfig {
        &self.config
    }

    fn navigate(&mut self, url: &str) -> Result<(), BrowserError> {
        self.live()?;
        let base = self.url.clone().unwrap_or_else(|| self.bundle.origin.clone());
        let target = canonicalize(url, Some(&base)).map_err(|e| BrowserError::InvalidUrl(e.to_string()))?;
        self.load(&target)
    }

    fn current_url(&mut self) -> Result<String, BrowserError> {
        self.live()?;
        self.url.clone().ok_or(BrowserError::NoPage)
    }

    fn page_source(&mut self) -> Result<String, BrowserError> {
        self.live()?;
        self.doc.as_ref().map(HtmlDocument::to_html).ok_or(BrowserError::NoPage)
    }

    fn interact(&mut self, target: &ElementRef, action: &Action) -> Result<(), BrowserError> {
        self.live()?;
        let doc = self.doc.as_ref().ok_or(BrowserError::NoPage)?;
        let path = target.resolve_one(doc).ok_or_else(|| BrowserError::ElementNotFound(target.to_string()))?;
        let radio_select = matches!(action, Action::SelectOption(_))
            && doc.element(&path).and_then(|e| e.input_type()).as_deref() == Some("radio");
        if !radio_select && (!is_visible(doc, &path) || !is_enabled(doc, &path)) {
            return Err(BrowserError::ElementNotInteractable(target.to_string()));
        }
        self.stats.interactions += 1;
        let page_before = self.url.clone();
        let (changed, clicked) = match action {
            Action::Click => {
                self.click(&path)?;
                (path, true)
            }
            Action::SetValue(v) => {
                self.set_value(&path, v)?;
                (path, false)
            }
            Action::SelectOption(v) => (self.select_option(&path, v)?, false),
            Action::Toggle => {
                self.toggle(&path)?;
                (path, false)
            }
            Action::Submit => {
                self.submit(&path)?;
                (path, true)
            }
        };
        if self.url != page_before {
            return Ok(());
        }
        let firings = self.apply_rules(changed, clicked);
        self.stats.rule_firings += firings;
        self.stats.max_firings_per_interaction = self.stats.max_firings_per_interaction.max(firings);
        Ok(())
    }

    fn validation_errors(&mut self, scope: &ElementRef) -> Result<Vec<FieldDescriptor>, BrowserError> {
        self.live()?;
        let doc = self.doc.as_ref().ok_or(BrowserError::NoPage)?;
        let root = resolve_scope(doc, scope).map_err(|e| BrowserError::ElementNotFound(e.to_string()))?;
        Ok(invalid_fields(doc, &root, |f| Ok(self.value_of(f)))?.into_iter().map(|(f, _)| f).collect())
    }

    fn close(&mut self) -> Result<(), BrowserError> {
        self.closed = true;
        self.doc = None;
        Ok(())
    }
}

//! Breadth-first crawl through a [`Session`] into a [`TransitionGraph`].

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::{Affordance, AffordanceKind, NodeId, PageNode, TransitionGraph};
use super::url::{canonicalize, is_web_url, same_origin};
use crate::browser::{Action, BrowserError, Session};
use crate::dom::{emit_ref, extract_forms, fingerprint_at, is_enabled, is_visible, parse_document, Element, HtmlDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlLimits {
    pub max_depth: usize,
    pub max_pages: usize,
    pub same_origin: bool,
    /// Click non-anchor buttons and keep those that change the current URL.
    #[serde(default = "default_true")]
    pub probe_buttons: bool,
}

fn default_true() -> bool {
    true
}

impl Default for CrawlLimits {
    fn default() -> Self {
        CrawlLimits { max_depth: 5, max_pages: 100, same_origin: true, probe_buttons: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlFailure {
    pub url: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlReport {
    pub graph: TransitionGraph,
    /// Pages that could not be loaded or probed. The crawl continues past them.
    pub failures: Vec<CrawlFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CrawlError {
    #[error("start page {url} is unreachable: {reason}")]
    StartUnreachable { url: String, reason: String },
}

struct PendingEdge {
    source: NodeId,
    target_url: String,
    affordance: Affordance,
}

fn affordance_label(el: &Element) -> String {
    let text = el.normalized_text();
    if !text.is_empty() {
        return text;
    }
    for attr in ["aria-label", "title", "value", "alt"] {
        if let Some(v) = el.attr(attr).map(str::trim).filter(|v| !v.is_empty()) {
            return v.to_string();
        }
    }
    String::new()
}

fn is_button(el: &Element) -> bool {
    el.tag == "button" || matches!(el.input_type().as_deref(), Some("submit" | "button" | "image"))
}

pub fn crawl<S: Session + ?Sized>(session: &mut S, start_url: &str, limits: CrawlLimits) -> Result<CrawlReport, CrawlError> {
    let unreachable = |reason: String| CrawlError::StartUnreachable { url: start_url.to_string(), reason };
    session.navigate(start_url).map_err(|e| unreachable(e.to_string()))?;
    let start = session.current_url().map_err(|e| unreachable(e.to_string()))?;

    let mut graph = TransitionGraph { nodes: Vec::new(), edges: Vec::new(), start_id: 0 };
    let mut failures = Vec::new();
    let mut pending: Vec<PendingEdge> = Vec::new();
    // Requested URL to the URL that actually served it.
    let mut aliases: BTreeMap<String, String> = BTreeMap::new();
    let mut queued: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<(String, usize)> = VecDeque::new();
    let mut discovered: Vec<String> = Vec::new();
    queue.push_back((start.clone(), 0));
    queued.insert(start.clone());
    let mut loaded_start = true;

    while let Some((url, depth)) = queue.pop_front() {
        if graph.nodes.iter().filter(|n| n.expanded).count() >= limits.max_pages {
            break;
        }
        if depth > limits.max_depth || (limits.same_origin && !same_origin(&url, &start)) {
            continue;
        }
        let reached = if loaded_start {
            loaded_start = false;
            Ok(start.clone())
        } else {
            session.navigate(&url).and_then(|_| session.current_url())
        };
        let actual = match reached {
            Ok(actual) => actual,
            Err(e) => {
                failures.push(CrawlFailure { url: url.clone(), error: e.to_string() });
                continue;
            }
        };
        if actual != url {
            aliases.insert(url.clone(), actual.clone());
            if graph.node_by_url(&actual).is_some() {
                continue;
            }
            queued.insert(actual.clone());
        }
        let source = match session.page_source() {
            Ok(s) => s,
            Err(e) => {
                failures.push(CrawlFailure { url: actual.clone(), error: e.to_string() });
                continue;
            }
        };
        let doc = parse_document(&source);
        let id = graph.nodes.len();
        let mut node = PageNode::leaf(id, actual.clone());
        node.expanded = true;
        node.title = doc.title().unwrap_or_default();
        node.fingerprint = Some(fingerprint_at(&doc, &[]));
        node.has_forms = !extract_forms(&doc).is_empty();
        node.metadata.insert("depth".into(), format!("{}", depth));
        if actual != url {
            node.metadata.insert("redirected_from".into(), url.clone());
        }
        graph.nodes.push(node);

        let mut targets = anchor_edges(&doc, id, &actual, &mut pending);
        if limits.probe_buttons {
            match probe_buttons(session, &doc, id, &actual) {
                Ok(found) => {
                    targets.extend(found.iter().map(|e| e.target_url.clone()));
                    pending.extend(found);
                }
                Err(e) => failures.push(CrawlFailure { url: actual.clone(), error: format!("button probe: {}", e) }),
            }
        }
        for target in targets {
            if !discovered.contains(&target) {
                discovered.push(target.clone());
            }
            if queued.insert(target.clone()) {
                queue.push_back((target, depth + 1));
            }
        }
    }

    if graph.nodes.is_empty() {
        return Err(unreachable("start page could not be loaded".into()));
    }

    let failed: BTreeMap<&str, &str> = failures.iter().map(|f| (f.url.as_str(), f.error.as_str())).collect();
    for url in discovered {
        let resolved = aliases.get(&url).cloned().unwrap_or(url);
        if graph.node_by_url(&resolved).is_none() {
            let id = graph.nodes.len();
            let mut leaf = PageNode::leaf(id, resolved.clone());
            if let Some(err) = failed.get(resolved.as_str()) {
                leaf.metadata.insert("error".into(), (*err).to_string());
            }
            graph.nodes.push(leaf);
        }
    }
    for edge in pending {
        let resolved = aliases.get(&edge.target_url).cloned().unwrap_or(edge.target_url);
        if let Some(target) = graph.node_by_url(&resolved).map(|n| n.id) {
            graph.add_edge(edge.source, target, edge.affordance);
        }
    }
    Ok(CrawlReport { graph, failures })
}

/// Record an edge for every followable anchor. Returns the target URLs in document order.
fn anchor_edges(doc: &HtmlDocument, source: NodeId, page: &str, pending: &mut Vec<PendingEdge>) -> Vec<String> {
    let mut targets = Vec::new();
    for (path, el) in doc.walk() {
        if el.tag != "a" {
            continue;
        }
        let Some(href) = el.attr("href").map(str::trim).filter(|h| !h.is_empty() && !h.starts_with('#')) else {
            continue;
        };
        let Ok(target) = canonicalize(href, Some(page)) else { continue };
        if !is_web_url(&target) || target == page {
            continue;
        }
        let affordance = Affordance { kind: AffordanceKind::Anchor, locator: emit_ref(doc, &path), label: affordance_label(el) };
        pending.push(PendingEdge { source, target_url: target.clone(), affordance });
        targets.push(target);
    }
    targets
}

/// Click each visible button and keep those that lead to another URL, returning to the page
/// after every click that navigated.
fn probe_buttons<S: Session + ?Sized>(
    session: &mut S,
    doc: &HtmlDocument,
    source: NodeId,
    page: &str,
) -> Result<Vec<PendingEdge>, BrowserError> {
    let mut found = Vec::new();
    let buttons: Vec<_> = doc
        .walk()
        .into_iter()
        .filter(|(p, e)| is_button(e) && is_visible(doc, p) && is_enabled(doc, p))
        .map(|(p, e)| (emit_ref(doc, &p), affordance_label(e)))
        .collect();
    for (i, (locator, label)) in buttons.into_iter().enumerate() {
        // Any click may have changed page state, so every later probe starts from a fresh load.
        if i > 0 {
            session.navigate(page)?;
        }
        match session.interact(&locator, &Action::Click) {
            Ok(()) => {}
            Err(e) if e.is_fatal() => return Err(e),
            Err(_) => continue,
        }
        let now = session.current_url()?;
        if now != page {
            found.push(PendingEdge { source, target_url: now, affordance: Affordance { kind: AffordanceKind::Button, locator, label } });
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::browser::{SimulatorSession, SiteBundle};
    use alloc::sync::Arc;

    fn site(pages: &[(&str, &[&str])]) -> SimulatorSession {
        let mut b = SiteBundle::new("http://sim.test");
        for (path, links) in pages {
            let body: String = links.iter().map(|l| format!(r#"<a href="{}">{}</a>"#, l, l)).collect();
            b.add_page(path, format!("<title>{}</title>{}", path, body));
        }
        SimulatorSession::new(Arc::new(b))
    }

    #[test]
    fn single_page() {
        let mut s = site(&[("/", &[])]);
        let r = crawl(&mut s, "http://sim.test/", CrawlLimits::default()).unwrap();
        assert_eq!((r.graph.nodes.len(), r.graph.edges.len()), (1, 0));
    }

    #[test]
    fn small_site() {
        let mut s = site(&[("/", &["/a", "/b"]), ("/a", &["/b"]), ("/b", &[])]);
        let r = crawl(&mut s, "http://sim.test/", CrawlLimits::default()).unwrap();
        assert_eq!((r.graph.nodes.len(), r.graph.edges.len()), (3, 3));
        assert!(r.failures.is_empty());
    }

    #[test]
    fn page_limit_and_broken_links() {
        let mut s = site(&[("/", &["/1", "/2", "/3", "/4"]), ("/1", &[]), ("/2", &[]), ("/3", &[]), ("/4", &["/gone"])]);
        let r = crawl(&mut s, "http://sim.test/", CrawlLimits { max_pages: 2, ..Default::default() }).unwrap();
        assert_eq!(r.graph.nodes.iter().filter(|n| n.expanded).count(), 2);
        assert_eq!(r.graph.nodes.len(), 5);

        let mut s = site(&[("/", &["/gone"])]);
        let r = crawl(&mut s, "http://sim.test/", CrawlLimits::default()).unwrap();
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.graph.nodes[1].metadata.get("error").map(String::is_empty), Some(false));
    }

    #[test]
    fn unreachable_start() {
        let mut s = site(&[("/", &[])]);
        assert!(matches!(crawl(&mut s, "http://sim.test/nope", CrawlLimits::default()), Err(CrawlError::StartUnreachable { .. })));
    }

    #[test]
    fn redirects_and_buttons() {
        let mut b = SiteBundle::new("http://sim.test");
        b.add_page("/", r#"<a href="/old">old</a><form action="/next"><button>Next</button></form><button type="button">noop</button>"#);
        b.add_page("/new", "<p>new</p>");
        b.add_page("/next", "<p>next</p>");
        b.add_redirect("/old", "/new");
        let mut s = SimulatorSession::new(Arc::new(b));
        let r = crawl(&mut s, "http://sim.test/", CrawlLimits::default()).unwrap();
        let urls: Vec<&str> = r.graph.nodes.iter().map(|n| n.url.as_str()).collect();
        assert_eq!(urls, ["http://sim.test/", "http://sim.test/new", "http://sim.test/next"]);
        let kinds: Vec<(NodeId, AffordanceKind)> = r.graph.edges.iter().map(|e| (e.target, e.affordance.kind)).collect();
        assert_eq!(kinds, [(1, AffordanceKind::Anchor), (2, AffordanceKind::Button)]);
    }
}

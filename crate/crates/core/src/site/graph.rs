//! Transition graph types and their versioned JSON document form.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dom::{ElementRef, StateFingerprint};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageNode {
    pub id: NodeId,
    pub url: String,
    /// `None` for pages that were discovered but not visited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<StateFingerprint>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub has_forms: bool,
    #[serde(default)]
    pub expanded: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl PageNode {
    pub fn leaf(id: NodeId, url: impl Into<String>) -> Self {
        PageNode {
            id,
            url: url.into(),
            fingerprint: None,
            title: String::new(),
            has_forms: false,
            expanded: false,
            metadata: BTreeMap::new(),
        }
    }

    /// Title, or the URL when the page has none.
    pub fn display_name(&self) -> &str {
        if self.title.is_empty() {
            &self.url
        } else {
            &self.title
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AffordanceKind {
    Anchor,
    Button,
}

impl AffordanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AffordanceKind::Anchor => "anchor",
            AffordanceKind::Button => "button",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affordance {
    pub kind: AffordanceKind,
    #[serde(rename = "ref")]
    pub locator: ElementRef,
    /// Visible text; empty when the element has none.
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub affordance: Affordance,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionGraph {
    pub nodes: Vec<PageNode>,
    pub edges: Vec<NavEdge>,
    pub start_id: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

impl TransitionGraph {
    /// A graph with a single start node.
    pub fn with_start(url: impl Into<String>) -> Self {
        TransitionGraph { nodes: alloc::vec![PageNode::leaf(0, url)], edges: Vec::new(), start_id: 0 }
    }

    pub fn node(&self, id: NodeId) -> Option<&PageNode> {
        self.nodes.get(id).filter(|n| n.id == id).or_else(|| self.nodes.iter().find(|n| n.id == id))
    }

    pub fn node_by_url(&self, url: &str) -> Option<&PageNode> {
        self.nodes.iter().find(|n| n.url == url)
    }

    pub fn add_node(&mut self, url: impl Into<String>) -> NodeId {
        let id = self.nodes.iter().map(|n| n.id + 1).max().unwrap_or(0);
        self.nodes.push(PageNode::leaf(id, url));
        id
    }

    pub fn add_edge(&mut self, source: NodeId, target: NodeId, affordance: Affordance) {
        self.edges.push(NavEdge { source, target, affordance, weight: 1.0 });
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &NavEdge> {
        self.edges.iter().filter(move |e| e.source == id)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let mut ids: Vec<NodeId> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(GraphError::SchemaViolation("duplicate node id".into()));
        }
        if !self.nodes.is_empty() && ids.binary_search(&self.start_id).is_err() {
            return Err(GraphError::UnknownNode(self.start_id));
        }
        for e in &self.edges {
            for id in [e.source, e.target] {
                if ids.binary_search(&id).is_err() {
                    return Err(GraphError::UnknownNode(id));
                }
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(GraphError::SchemaViolation(alloc::format!("edge weight {} is not positive", e.weight)));
            }
        }
        Ok(())
    }

    /// Versioned JSON document.
    pub fn to_json(&self) -> String {
        let doc = GraphDocument { version: GRAPH_SCHEMA_VERSION, graph: self.clone() };
        serde_json::to_string_pretty(&doc).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| GraphError::SchemaViolation(e.to_string()))?;
        check_version(&value, GRAPH_SCHEMA_VERSION).map_err(GraphError::SchemaViolation)?;
        let doc: GraphDocument =
            serde_json::from_value(value).map_err(|e| GraphError::SchemaViolation(e.to_string()))?;
        doc.graph.validate()?;
        Ok(doc.graph)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    version: u32,
    graph: TransitionGraph,
}

/// Check the top-level `version` field of a JSON document.
pub fn check_version(value: &serde_json::Value, expected: u32) -> Result<(), String> {
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(expected) => Ok(()),
        Some(v) => Err(alloc::format!("unsupported schema version {} (expected {})", v, expected)),
        None => Err("missing schema version".into()),
    }
}

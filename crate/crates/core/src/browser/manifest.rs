//! Reaction manifests: the visibility rules and ground truth that accompany a synthetic form.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dom::{Constraints, ControlType, ElementRef, HtmlDocument, Required};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    ValueEquals { value: String },
    Checked,
    Clicked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Show,
    Hide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    /// `id` of the element whose inline display is toggled.
    pub target: String,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub trigger: ElementRef,
    pub condition: Condition,
    pub effects: Vec<Effect>,
}

/// A toggleable container. `parent` is the enclosing region, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    /// Whether the region is displayed when the page loads.
    pub displayed: bool,
}

/// A `type=button` element referenced by click rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestButton {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthField {
    /// `id` of the control; for radio groups, of the first button.
    pub id: String,
    pub name: String,
    pub control: ControlType,
    pub required: Required,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Constraints::is_empty")]
    pub constraints: Constraints,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    /// `id`s of each radio button, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub member_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fields: Vec<GroundTruthField>,
    /// Distinct display configurations reachable under the rules.
    pub state_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionManifest {
    pub version: u32,
    pub form_id: String,
    pub rules: Vec<Rule>,
    /// `id`s of every region and control displayed when the page loads.
    pub initial_visible: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buttons: Vec<ManifestButton>,
    pub ground_truth: GroundTruth,
}

impl ReactionManifest {
    pub fn form_ref(&self) -> ElementRef {
        ElementRef::id(self.form_id.clone())
    }

    /// Ids referenced by rules or regions that the companion HTML does not contain.
    pub fn missing_ids(&self, doc: &HtmlDocument) -> Vec<String> {
        let mut ids: Vec<&str> = Vec::new();
        ids.push(&self.form_id);
        for rule in &self.rules {
            ids.extend(rule.effects.iter().map(|e| e.target.as_str()));
        }
        ids.extend(self.regions.iter().map(|r| r.id.as_str()));
        ids.extend(self.ground_truth.fields.iter().map(|f| f.id.as_str()));
        let mut missing: Vec<String> =
            ids.into_iter().filter(|id| doc.find_by_id(id).is_none()).map(|s| s.to_string()).collect();
        for rule in &self.rules {
            if rule.trigger.resolve(doc).len() != 1 {
                missing.push(rule.trigger.to_string());
            }
        }
        missing.sort();
        missing.dedup();
        missing
    }
}

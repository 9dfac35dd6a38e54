//! Synthetic form generation with matching reaction manifests.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::enumerate::enumerate_states;
use super::pool::{unique_name, FieldSampler, InputPool, InputPoolEntry};
use crate::browser::{Condition, Effect, GroundTruth, GroundTruthField, ReactionManifest, Region, Rule, Visibility, MANIFEST_VERSION};
use crate::dom::serialize::{escaped_attr as escape_attr, escaped_text as escape_text};
use crate::dom::{ControlType, ElementRef, Required};

pub const FORM_ID: &str = "bench-form";
pub const TRIGGER_ID: &str = "section";
/// Where benchmark forms submit to.
pub const SUBMIT_ACTION: &str = "/submitted";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Simple,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequiredMode {
    /// The `required` attribute.
    Direct,
    /// A `<span class="required">*</span>` marker in the label.
    Indirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSpec {
    pub kind: FormKind,
    /// Pool fields in the form, not counting the sub-form trigger.
    pub field_count: usize,
    pub required_mode: RequiredMode,
    /// Dynamic forms only: number of sub-forms, in `[2, 4]`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub sub_form_count: usize,
    pub seed: u64,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedForm {
    pub html: String,
    pub manifest: ReactionManifest,
    pub spec: FormSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("invalid form spec: {0}")]
    InvalidSpec(String),
    #[error("could not enumerate states: {0}")]
    Enumeration(String),
}

/// Share of non-hidden fields that are required.
pub const REQUIRED_PROBABILITY: f64 = 0.4;

/// Upper bound on enumerated states; generated forms stay far below it.
const STATE_LIMIT: usize = 4096;

impl FormSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let invalid = |m: &str| Err(BenchError::InvalidSpec(m.into()));
        match self.kind {
            FormKind::Simple if self.field_count == 0 => invalid("simple forms need at least one field"),
            FormKind::Simple if self.sub_form_count != 0 => invalid("simple forms have no sub-forms"),
            FormKind::Dynamic if !(2..=4).contains(&self.sub_form_count) => invalid("dynamic forms need 2 to 4 sub-forms"),
            FormKind::Dynamic if self.field_count < self.sub_form_count => invalid("every sub-form needs a field"),
            _ => Ok(()),
        }
    }
}

struct Placed {
    entry: InputPoolEntry,
    id: String,
    required: bool,
    region: Option<usize>,
}

fn control_html(out: &mut String, p: &Placed, mode: RequiredMode) {
    let e = &p.entry;
    let required_attr = if p.required && mode == RequiredMode::Direct { " required" } else { "" };
    let marker = if p.required && mode == RequiredMode::Indirect { r#"<span class="required">*</span>"# } else { "" };
    let label = |out: &mut String, target: &str| {
        out.push_str(&format!(r#"<label for="{}">{}{}</label>"#, escape_attr(target), escape_text(&e.label), marker));
    };
    let mut constraints = String::new();
    let c = &e.constraints;
    for (name, value) in [("min", &c.min), ("max", &c.max), ("pattern", &c.pattern)] {
        if let Some(v) = value {
            constraints.push_str(&format!(r#" {}="{}""#, name, escape_attr(v)));
        }
    }
    for (name, value) in [("minlength", c.minlength), ("maxlength", c.maxlength)] {
        if let Some(v) = value {
            constraints.push_str(&format!(r#" {}="{}""#, name, v));
        }
    }
    let (id, name) = (escape_attr(&p.id), escape_attr(&e.name));
    match e.control {
        ControlType::Hidden => {
            out.push_str(&format!(r#"<input type="hidden" id="{}" name="{}" value="{}-value">"#, id, name, name));
            return;
        }
        ControlType::Radio => {
            out.push_str(r#"<div class="field">"#);
            label(out, &format!("{}-0", p.id));
            for (j, option) in e.options.iter().enumerate() {
                let req = if j == 0 { required_attr } else { "" };
                out.push_str(&format!(
                    r#"<label><input type="radio" id="{}-{}" name="{}" value="{}"{}>{}</label>"#,
                    id,
                    j,
                    name,
                    escape_attr(option),
                    req,
                    escape_text(option)
                ));
            }
            out.push_str("</div>");
            return;
        }
        _ => {}
    }
    out.push_str(r#"<div class="field">"#);
    label(out, &p.id);
    match e.control {
        ControlType::Select => {
            out.push_str(&format!(r#"<select id="{}" name="{}"{}>"#, id, name, required_attr));
            for option in &e.options {
                out.push_str(&format!(r#"<option value="{}">{}</option>"#, escape_attr(option), escape_text(option)));
            }
            out.push_str("</select>");
        }
        ControlType::Textarea => {
            out.push_str(&format!(r#"<textarea id="{}" name="{}"{}{}></textarea>"#, id, name, constraints, required_attr));
        }
        control => {
            out.push_str(&format!(
                r#"<input type="{}" id="{}" name="{}"{}{}>"#,
                control.as_str(),
                id,
                name,
                constraints,
                required_attr
            ));
        }
    }
    out.push_str("</div>");
}

fn sub_form_id(i: usize) -> String {
    format!("sub-{}", i)
}

/// Build the form described by `spec` from `pool`. Everything random is derived from `spec.seed`.
pub fn generate_form(spec: &FormSpec, pool: &InputPool) -> Result<GeneratedForm, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sampler = FieldSampler::new(pool);
    let mut taken: BTreeSet<String> = BTreeSet::new();
    if spec.kind == FormKind::Dynamic {
        taken.insert(TRIGGER_ID.into());
    }
    let sub_forms = if spec.kind == FormKind::Dynamic { spec.sub_form_count } else { 0 };

    let mut placed: Vec<Placed> = Vec::with_capacity(spec.field_count);
    for i in 0..spec.field_count {
        let mut entry = sampler.sample(&mut rng).clone();
        entry.name = unique_name(&mut taken, &entry.name);
        let required = entry.control != ControlType::Hidden && rng.gen_bool(REQUIRED_PROBABILITY);
        // The first `sub_forms` fields seed one sub-form each so none is empty.
        let region = match sub_forms {
            0 => None,
            k if i < k => Some(i),
            k => Some(rng.gen_range(0..k)),
        };
        placed.push(Placed { entry, id: format!("f{}", i + 1), required, region });
    }
    // Document order: fields grouped by sub-form, sampling order within each.
    placed.sort_by_key(|p| p.region);

    let mut html = String::new();
    html.push_str(&format!(
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>Benchmark form {:016x}</title></head><body>",
        spec.seed
    ));
    html.push_str(&format!(r#"<form id="{}" action="{}" method="post">"#, FORM_ID, SUBMIT_ACTION));
    if sub_forms > 0 {
        html.push_str(&format!(r#"<div class="field"><label for="{0}">Section</label><select id="{0}" name="{0}">"#, TRIGGER_ID));
        for i in 0..sub_forms {
            html.push_str(&format!(r#"<option value="{}">Part {}</option>"#, sub_form_id(i), i + 1));
        }
        html.push_str("</select></div>");
    }
    let mut open: Option<usize> = None;
    for p in &placed {
        if p.region != open {
            if open.is_some() {
                html.push_str("</fieldset>");
            }
            if let Some(r) = p.region {
                let style = if r == 0 { "" } else { r#" style="display:none""# };
                html.push_str(&format!(r#"<fieldset id="{}" class="sub-form"{}><legend>Part {}</legend>"#, sub_form_id(r), style, r + 1));
            }
            open = p.region;
        }
        control_html(&mut html, p, spec.required_mode);
    }
    if open.is_some() {
        html.push_str("</fieldset>");
    }
    html.push_str(r#"<button type="submit" id="submit">Submit</button></form></body></html>"#);
    html.push('\n');

    let mut fields = Vec::with_capacity(placed.len() + 1);
    if sub_forms > 0 {
        fields.push(GroundTruthField {
            id: TRIGGER_ID.into(),
            name: TRIGGER_ID.into(),
            control: ControlType::Select,
            required: Required::No,
            region: None,
            options: (0..sub_forms).map(sub_form_id).collect(),
            constraints: Default::default(),
            label: Some("Section".into()),
            category: None,
            template_id: None,
            member_ids: Vec::new(),
        });
    }
    for p in &placed {
        let e = &p.entry;
        let radio = e.control == ControlType::Radio;
        fields.push(GroundTruthField {
            id: if radio { format!("{}-0", p.id) } else { p.id.clone() },
            name: e.name.clone(),
            control: e.control,
            required: match (p.required, spec.required_mode) {
                (false, _) => Required::No,
                (true, RequiredMode::Direct) => Required::Direct,
                (true, RequiredMode::Indirect) => Required::Indirect,
            },
            region: p.region.map(sub_form_id),
            options: e.options.clone(),
            constraints: e.constraints.clone(),
            label: (e.control != ControlType::Hidden).then(|| e.label.clone()),
            category: Some(e.category.as_str().into()),
            template_id: Some(e.template_id.clone()),
            member_ids: if radio { (0..e.options.len()).map(|j| format!("{}-{}", p.id, j)).collect() } else { Vec::new() },
        });
    }

    let regions: Vec<Region> = (0..sub_forms).map(|i| Region { id: sub_form_id(i), parent: None, displayed: i == 0 }).collect();
    let rules: Vec<Rule> = (0..sub_forms)
        .map(|i| Rule {
            trigger: ElementRef::id(TRIGGER_ID),
            condition: Condition::ValueEquals { value: sub_form_id(i) },
            effects: (0..sub_forms)
                .map(|j| Effect { target: sub_form_id(j), visibility: if i == j { Visibility::Show } else { Visibility::Hide } })
                .collect(),
        })
        .collect();
    let mut initial_visible: Vec<String> = regions.iter().filter(|r| r.displayed).map(|r| r.id.clone()).collect();
    initial_visible.extend(
        fields
            .iter()
            .filter(|f| f.control != ControlType::Hidden && f.region.as_deref().is_none_or(|r| r == "sub-0"))
            .map(|f| f.id.clone()),
    );

    let mut manifest = ReactionManifest {
        version: MANIFEST_VERSION,
        form_id: FORM_ID.into(),
        rules,
        initial_visible,
        regions,
        buttons: Vec::new(),
        ground_truth: GroundTruth { fields, state_count: 0 },
    };
    manifest.ground_truth.state_count =
        enumerate_states(&manifest, STATE_LIMIT).map_err(|e| BenchError::Enumeration(e.to_string()))?;
    Ok(GeneratedForm { html, manifest, spec: *spec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::{extract_forms, parse_document};

    fn spec(kind: FormKind, n: usize, mode: RequiredMode, subs: usize, seed: u64) -> FormSpec {
        FormSpec { kind, field_count: n, required_mode: mode, sub_form_count: subs, seed }
    }

    #[test]
    fn simple_form() {
        let pool = InputPool::builtin();
        let g = generate_form(&spec(FormKind::Simple, 5, RequiredMode::Direct, 0, 1), &pool).unwrap();
        assert_eq!(g.manifest.ground_truth.state_count, 1);
        assert_eq!(g.manifest.ground_truth.fields.len(), 5);
        let doc = parse_document(&g.html);
        assert_eq!(extract_forms(&doc)[0].fields.len(), 5);
    }

    #[test]
    fn dynamic_state_count_matches_sub_forms() {
        let pool = InputPool::builtin();
        for subs in 2..=4 {
            let g = generate_form(&spec(FormKind::Dynamic, 9, RequiredMode::Direct, subs, 7), &pool).unwrap();
            assert_eq!(g.manifest.ground_truth.state_count, subs);
            assert_eq!(g.manifest.regions.iter().filter(|r| r.displayed).count(), 1);
        }
    }

    #[test]
    fn indirect_mode_uses_markers_only() {
        let pool = InputPool::builtin();
        for seed in 0..20 {
            let g = generate_form(&spec(FormKind::Simple, 12, RequiredMode::Indirect, 0, seed), &pool).unwrap();
            let required = g.manifest.ground_truth.fields.iter().filter(|f| f.required.is_required()).count();
            assert_eq!(g.html.matches(" required").count(), 0);
            assert_eq!(g.html.matches(r#"<span class="required">*</span>"#).count(), required);
        }
    }

    #[test]
    fn invalid_specs() {
        let pool = InputPool::builtin();
        assert!(generate_form(&spec(FormKind::Dynamic, 6, RequiredMode::Direct, 5, 0), &pool).is_err());
        assert!(generate_form(&spec(FormKind::Dynamic, 1, RequiredMode::Direct, 2, 0), &pool).is_err());
        assert!(generate_form(&spec(FormKind::Simple, 0, RequiredMode::Direct, 0, 0), &pool).is_err());
    }
}

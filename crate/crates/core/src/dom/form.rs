//! Form and field extraction, visibility, and interactable-element discovery.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::locate::{emit_ref, ElementRef};
use super::node::{collapse_whitespace, Element, HtmlDocument, Node, NodePath};
use super::DomError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlType {
    Text,
    Email,
    Password,
    Number,
    Date,
    Month,
    Week,
    Time,
    Url,
    Tel,
    Checkbox,
    Radio,
    Select,
    Textarea,
    File,
    Hidden,
    Color,
    Range,
    Search,
}

impl ControlType {
    pub const ALL: [ControlType; 19] = [
        ControlType::Text,
        ControlType::Email,
        ControlType::Password,
        ControlType::Number,
        ControlType::Date,
        ControlType::Month,
        ControlType::Week,
        ControlType::Time,
        ControlType::Url,
        ControlType::Tel,
        ControlType::Checkbox,
        ControlType::Radio,
        ControlType::Select,
        ControlType::Textarea,
        ControlType::File,
        ControlType::Hidden,
        ControlType::Color,
        ControlType::Range,
        ControlType::Search,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControlType::Text => "text",
            ControlType::Email => "email",
            ControlType::Password => "password",
            ControlType::Number => "number",
            ControlType::Date => "date",
            ControlType::Month => "month",
            ControlType::Week => "week",
            ControlType::Time => "time",
            ControlType::Url => "url",
            ControlType::Tel => "tel",
            ControlType::Checkbox => "checkbox",
            ControlType::Radio => "radio",
            ControlType::Select => "select",
            ControlType::Textarea => "textarea",
            ControlType::File => "file",
            ControlType::Hidden => "hidden",
            ControlType::Color => "color",
            ControlType::Range => "range",
            ControlType::Search => "search",
        }
    }

    pub fn parse(s: &str) -> Option<ControlType> {
        ControlType::ALL.iter().copied().find(|c| c.as_str() == s)
    }

    /// Field control type of an element, or `None` for non-field elements such as buttons.
    /// Unrecognized input types fall back to `text`, as browsers do.
    pub fn of_element(el: &Element) -> Option<ControlType> {
        match el.tag.as_str() {
            "select" => Some(ControlType::Select),
            "textarea" => Some(ControlType::Textarea),
            "input" => {
                let ty = el.input_type().unwrap_or_default();
                match ty.as_str() {
                    "submit" | "button" | "reset" | "image" => None,
                    other => Some(ControlType::parse(other).unwrap_or(ControlType::Text)),
                }
            }
            _ => None,
        }
    }

    /// Controls whose value is typed rather than chosen.
    pub fn is_text_like(self) -> bool {
        !matches!(
            self,
            ControlType::Checkbox
                | ControlType::Radio
                | ControlType::Select
                | ControlType::File
                | ControlType::Hidden
        )
    }
}

impl core::fmt::Display for ControlType {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Required {
    #[default]
    No,
    Direct,
    Indirect,
}

impl Required {
    pub fn is_required(self) -> bool {
        self != Required::No
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxlength: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minlength: Option<usize>,
}

impl Constraints {
    pub fn is_empty(&self) -> bool {
        *self == Constraints::default()
    }

    pub fn from_element(el: &Element) -> Self {
        let text = |name: &str| el.attr(name).map(str::trim).filter(|v| !v.is_empty()).map(String::from);
        let int = |name: &str| el.attr(name).and_then(|v| v.trim().parse::<usize>().ok());
        Constraints {
            min: text("min"),
            max: text("max"),
            pattern: el.attr("pattern").filter(|v| !v.is_empty()).map(String::from),
            maxlength: int("maxlength"),
            minlength: int("minlength"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    #[serde(rename = "ref")]
    pub locator: ElementRef,
    pub control: ControlType,
    pub name: String,
    pub required: Required,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Constraints::is_empty")]
    pub constraints: Constraints,
    pub visible: bool,
    #[serde(default)]
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// `id` attribute of the source element, when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormModel {
    pub root: ElementRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    pub fields: Vec<FieldDescriptor>,
}

/// Declarations of an inline `style` attribute as lowercase `(property, value)` pairs.
pub fn style_declarations(style: &str) -> Vec<(String, String)> {
    style
        .split(';')
        .filter_map(|decl| {
            let (name, value) = decl.split_once(':')?;
            let name = name.trim().to_ascii_lowercase();
            let mut value = collapse_whitespace(value).to_ascii_lowercase();
            if let Some(v) = value.strip_suffix("!important") {
                value = v.trim_end().to_string();
            }
            if name.is_empty() || value.is_empty() {
                None
            } else {
                Some((name, value))
            }
        })
        .collect()
}

/// Whether the element itself hides its subtree (inline style or the `hidden` attribute).
pub fn hides_self(el: &Element) -> bool {
    if el.has_attr("hidden") || el.tag == "template" {
        return true;
    }
    let Some(style) = el.attr("style") else { return false };
    let mut hidden = false;
    for (name, value) in style_declarations(style) {
        match name.as_str() {
            "display" => hidden |= value == "none",
            "visibility" => hidden |= value == "hidden" || value == "collapse",
            _ => {}
        }
    }
    hidden
}

pub fn is_visible(doc: &HtmlDocument, path: &[usize]) -> bool {
    let chain = doc.ancestry(path);
    if chain.len() != path.len() + 1 {
        return false;
    }
    if chain.last().and_then(|e| e.input_type()).as_deref() == Some("hidden") {
        return false;
    }
    !chain.iter().any(|e| hides_self(e))
}

pub fn is_enabled(doc: &HtmlDocument, path: &[usize]) -> bool {
    let chain = doc.ancestry(path);
    let Some(last) = chain.last() else { return false };
    if last.has_attr("disabled") {
        return false;
    }
    !chain[..chain.len() - 1].iter().any(|e| e.tag == "fieldset" && e.has_attr("disabled"))
}

/// Resolve a scope locator to exactly one element.
pub fn resolve_scope(doc: &HtmlDocument, scope: &ElementRef) -> Result<NodePath, DomError> {
    let mut matches = scope.resolve(doc);
    match matches.len() {
        0 => Err(DomError::ScopeNotFound(scope.to_string())),
        1 => Ok(matches.remove(0)),
        n => Err(DomError::ScopeAmbiguous { scope: scope.to_string(), count: n }),
    }
}

fn is_marker(el: &Element) -> bool {
    el.tag == "span" && (el.has_class("required") || el.normalized_text() == "*")
}

fn contains_marker(el: &Element) -> bool {
    el.walk().iter().any(|(_, e)| is_marker(e))
}

fn label_text(el: &Element) -> String {
    fn collect(el: &Element, out: &mut String) {
        for child in &el.children {
            match child {
                Node::Text(t) => out.push_str(t),
                Node::Element(e) if is_marker(e) => {}
                Node::Element(e) if matches!(e.tag.as_str(), "input" | "select" | "textarea") => {}
                Node::Element(e) => collect(e, out),
            }
        }
    }
    let mut out = String::new();
    collect(el, &mut out);
    collapse_whitespace(&out)
}

/// Label elements associated with the control at `path`: `label[for=id]` and an enclosing label.
fn associated_labels<'a>(doc: &'a HtmlDocument, path: &[usize]) -> Vec<&'a Element> {
    let mut out = Vec::new();
    let chain = doc.ancestry(path);
    if let Some(id) = chain.last().and_then(|e| e.id()) {
        for (_, e) in doc.walk() {
            if e.tag == "label" && e.attr("for") == Some(id) {
                out.push(e);
            }
        }
    }
    for e in chain[..chain.len().saturating_sub(1)].iter().rev() {
        if e.tag == "label" {
            out.push(*e);
            break;
        }
    }
    out
}

fn adjacent_marker(doc: &HtmlDocument, path: &[usize]) -> bool {
    let Some((&last, parent_path)) = path.split_last() else { return false };
    let Some(parent) = doc.element(parent_path) else { return false };
    let siblings: Vec<(usize, &Element)> = parent.child_elements().collect();
    let Some(pos) = siblings.iter().position(|(i, _)| *i == last) else { return false };
    if siblings.get(pos + 1).is_some_and(|(_, e)| is_marker(e)) {
        return true;
    }
    // A marker sitting between two controls belongs to the one before it.
    let prev_is_marker = pos.checked_sub(1).and_then(|p| siblings.get(p)).is_some_and(|(_, e)| is_marker(e));
    let marker_claimed = pos
        .checked_sub(2)
        .and_then(|p| siblings.get(p))
        .is_some_and(|(_, e)| ControlType::of_element(e).is_some());
    prev_is_marker && !marker_claimed
}

fn has_indirect_marker(doc: &HtmlDocument, path: &[usize]) -> bool {
    adjacent_marker(doc, path) || associated_labels(doc, path).iter().any(|l| contains_marker(l))
}

fn option_values(select: &Element) -> Vec<String> {
    select
        .walk()
        .into_iter()
        .filter(|(_, e)| e.tag == "option")
        .map(|(_, e)| e.attr("value").map(String::from).unwrap_or_else(|| e.normalized_text()))
        .collect()
}

/// Field descriptors for every control inside the element at `scope`, in document order.
/// Radio buttons sharing a name form one descriptor located at the first button of the group.
pub fn fields_in(doc: &HtmlDocument, scope: &[usize]) -> Vec<FieldDescriptor> {
    let Some(root) = doc.element(scope) else { return Vec::new() };
    let entries: Vec<(NodePath, &Element, ControlType)> = root
        .walk()
        .into_iter()
        .filter_map(|(rel, e)| {
            let control = ControlType::of_element(e)?;
            let mut full = scope.to_vec();
            full.extend(rel);
            Some((full, e, control))
        })
        .collect();

    let mut seen_groups: BTreeSet<String> = BTreeSet::new();
    let mut fields = Vec::new();
    for (path, el, control) in &entries {
        let name = el.attr("name").unwrap_or("").to_string();
        let group: Vec<&(NodePath, &Element, ControlType)> = if *control == ControlType::Radio && !name.is_empty() {
            if !seen_groups.insert(name.clone()) {
                continue;
            }
            entries
                .iter()
                .filter(|(_, e, c)| *c == ControlType::Radio && e.attr("name") == Some(name.as_str()))
                .collect()
        } else {
            Vec::new()
        };
        let members: Vec<(&NodePath, &Element)> = if group.is_empty() {
            alloc::vec![(path, *el)]
        } else {
            group.iter().map(|(p, e, _)| (p, *e)).collect()
        };

        let required = if members.iter().any(|(_, e)| e.has_attr("required")) {
            Required::Direct
        } else if members.iter().any(|(p, _)| has_indirect_marker(doc, p)) {
            Required::Indirect
        } else {
            Required::No
        };
        let options = match control {
            ControlType::Select => option_values(el),
            ControlType::Radio => members
                .iter()
                .map(|(_, e)| e.attr("value").unwrap_or("on").to_string())
                .collect(),
            _ => Vec::new(),
        };
        let label = associated_labels(doc, path)
            .first()
            .map(|l| label_text(l))
            .filter(|t| !t.is_empty());
        fields.push(FieldDescriptor {
            locator: emit_ref(doc, path),
            control: *control,
            name,
            required,
            options,
            constraints: Constraints::from_element(el),
            visible: members.iter().any(|(p, _)| is_visible(doc, p)),
            enabled: members.iter().any(|(p, _)| is_enabled(doc, p)),
            label,
            element_id: el.id().map(String::from),
        });
    }
    fields
}

/// One model per `form` element, in document order.
pub fn extract_forms(doc: &HtmlDocument) -> Vec<FormModel> {
    doc.walk()
        .into_iter()
        .filter(|(_, e)| e.tag == "form")
        .map(|(path, e)| FormModel {
            root: emit_ref(doc, &path),
            action: e.attr("action").map(String::from),
            fields: fields_in(doc, &path),
        })
        .collect()
}

fn is_clickable(el: &Element) -> bool {
    match el.tag.as_str() {
        "button" => true,
        "a" => el.has_attr("href"),
        "input" => matches!(
            el.input_type().as_deref(),
            Some("submit" | "button" | "reset" | "image")
        ),
        _ => false,
    }
}

/// Paths of visible, enabled controls and clickable elements inside the element at `scope`.
pub fn interactable_paths(doc: &HtmlDocument, scope: &[usize]) -> Vec<NodePath> {
    let Some(root) = doc.element(scope) else { return Vec::new() };
    root.walk()
        .into_iter()
        .filter(|(_, e)| ControlType::of_element(e).is_some() || is_clickable(e))
        .map(|(rel, _)| {
            let mut full = scope.to_vec();
            full.extend(rel);
            full
        })
        .filter(|p| is_visible(doc, p) && is_enabled(doc, p))
        .collect()
}

pub fn find_interactable_elements(doc: &HtmlDocument, scope: &ElementRef) -> Result<Vec<ElementRef>, DomError> {
    let root = resolve_scope(doc, scope)?;
    Ok(interactable_paths(doc, &root).iter().map(|p| emit_ref(doc, p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_document;

    #[test]
    fn no_forms() {
        assert!(extract_forms(&parse_document("<p>hello</p>")).is_empty());
    }

    #[test]
    fn required_modes_and_options() {
        let doc = parse_document(
            r#"<form id="f">
              <label for="a">A</label><input id="a" name="a" required>
              <label for="b">B <span class="required">*</span></label><input id="b" name="b" type="email">
              <input id="c" name="c"><span>*</span>
              <select name="s"><option value="x">X<option>Y</select>
              <input type="radio" name="r" value="1"><input type="radio" name="r" value="2" required>
              <input type="hidden" name="h" value="t">
              <input type="submit" value="Go">
            </form>"#,
        );
        let forms = extract_forms(&doc);
        assert_eq!(forms.len(), 1);
        let f = &forms[0].fields;
        let summary: Vec<(&str, ControlType, Required)> =
            f.iter().map(|d| (d.name.as_str(), d.control, d.required)).collect();
        assert_eq!(
            summary,
            [
                ("a", ControlType::Text, Required::Direct),
                ("b", ControlType::Email, Required::Indirect),
                ("c", ControlType::Text, Required::Indirect),
                ("s", ControlType::Select, Required::No),
                ("r", ControlType::Radio, Required::Direct),
                ("h", ControlType::Hidden, Required::No),
            ]
        );
        assert_eq!(f[1].label.as_deref(), Some("B"));
        assert_eq!(f[3].options, ["x", "Y"]);
        assert_eq!(f[4].options, ["1", "2"]);
        assert!(!f[5].visible);
    }

    #[test]
    fn interactables_skip_hidden() {
        let doc = parse_document(
            r#"<form id="f"><input type="hidden" name="a"><div style="display: none"><input name="b"></div>
               <div hidden><select name="c"></select></div></form>"#,
        );
        assert!(find_interactable_elements(&doc, &ElementRef::id("f")).unwrap().is_empty());
        let doc = parse_document(r#"<form id="f"><select id="s"><option>1<option>2<option>3</select></form>"#);
        assert_eq!(find_interactable_elements(&doc, &ElementRef::id("f")).unwrap(), [ElementRef::id("s")]);
        assert!(matches!(
            find_interactable_elements(&doc, &ElementRef::id("nope")),
            Err(DomError::ScopeNotFound(_))
        ));
    }

    #[test]
    fn style_parsing() {
        let doc = parse_document(r#"<div id="x" style="color:red; DISPLAY : None !important"></div>"#);
        let p = doc.find_by_id("x").unwrap();
        assert!(!is_visible(&doc, &p));
    }
}

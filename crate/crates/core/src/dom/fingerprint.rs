//! State fingerprints: SHA-256 over a normalized serialization of a subtree.
//!
//! Normalization sorts attributes, drops whitespace-only text and collapses whitespace runs,
//! canonicalizes inline `style` declarations, and omits interaction state: the `value` of typed
//! controls, textarea content, and `checked`/`selected` flags. Structure and visibility remain.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::form::{fields_in, resolve_scope, style_declarations, ControlType};
use super::locate::ElementRef;
use super::node::{collapse_whitespace, Element, HtmlDocument, Node};
use super::serialize::{escape_attr, escape_text};
use super::DomError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateFingerprint {
    /// Lowercase hex SHA-256.
    pub digest: String,
    /// Visible fields in the subtree.
    pub field_count: usize,
}

impl StateFingerprint {
    pub fn short(&self) -> &str {
        &self.digest[..self.digest.len().min(12)]
    }
}

pub fn fingerprint(doc: &HtmlDocument, scope: &ElementRef) -> Result<StateFingerprint, DomError> {
    let path = resolve_scope(doc, scope)?;
    Ok(fingerprint_at(doc, &path))
}

/// Fingerprint of the element at `path`; the whole document when `path` is empty.
pub fn fingerprint_at(doc: &HtmlDocument, path: &[usize]) -> StateFingerprint {
    let normalized = doc.element(path).map(normalized_html).unwrap_or_default();
    let digest = Sha256::digest(normalized.as_bytes());
    let field_count = fields_in(doc, path).iter().filter(|f| f.visible).count();
    StateFingerprint { digest: to_hex(&digest), field_count }
}

pub fn to_hex(bytes: &[u8]) -> String {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push(HEX[(b >> 4) as usize] as char);
        out.push(HEX[(b & 0xf) as usize] as char);
    }
    out
}

/// The normalized serialization hashed by [`fingerprint_at`].
pub fn normalized_html(el: &Element) -> String {
    let mut out = String::new();
    write_normalized(el, &mut out);
    out
}

fn drops_value(el: &Element) -> bool {
    match ControlType::of_element(el) {
        Some(ControlType::Checkbox | ControlType::Radio | ControlType::Hidden) => false,
        Some(_) => true,
        None => false,
    }
}

fn write_normalized(el: &Element, out: &mut String) {
    out.push('<');
    out.push_str(&el.tag);
    let skip_value = drops_value(el);
    let mut attrs: Vec<(&str, String)> = el
        .attrs
        .iter()
        .filter(|a| !matches!(a.name.as_str(), "checked" | "selected"))
        .filter(|a| !(skip_value && a.name == "value"))
        .filter_map(|a| {
            if a.name == "style" {
                let mut decls = style_declarations(&a.value);
                decls.sort();
                decls.dedup();
                if decls.is_empty() {
                    return None;
                }
                let joined: Vec<String> = decls.iter().map(|(n, v)| alloc::format!("{}:{}", n, v)).collect();
                Some((a.name.as_str(), joined.join(";")))
            } else {
                Some((a.name.as_str(), a.value.clone()))
            }
        })
        .collect();
    attrs.sort();
    for (name, value) in attrs {
        out.push(' ');
        out.push_str(name);
        out.push_str("=\"");
        escape_attr(&value, out);
        out.push('"');
    }
    out.push('>');
    if el.tag != "textarea" {
        for child in &el.children {
            match child {
                Node::Element(e) => write_normalized(e, out),
                Node::Text(t) => {
                    let t = collapse_whitespace(t);
                    if !t.is_empty() {
                        escape_text(&t, out);
                    }
                }
            }
        }
    }
    out.push_str("</");
    out.push_str(&el.tag);
    out.push('>');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_document;

    fn fp(html: &str) -> StateFingerprint {
        fingerprint(&parse_document(html), &ElementRef::css("form")).unwrap()
    }

    #[test]
    fn attribute_order_and_whitespace() {
        assert_eq!(
            fp(r#"<form><input name="a" type="text">  <b>x</b></form>"#),
            fp("<form>\n<input type=\"text\"   name=\"a\"><b> x </b>\n</form>")
        );
    }

    #[test]
    fn typed_values_and_selection_ignored() {
        let base = fp(r#"<form><input name="a"><textarea></textarea><select><option>1<option>2</select></form>"#);
        let typed = fp(
            r#"<form><input name="a" value="hi"><textarea>typed</textarea><select><option>1<option selected>2</select></form>"#,
        );
        assert_eq!(base, typed);
    }

    #[test]
    fn visibility_changes_digest() {
        let shown = fp(r#"<form><div id="s" style="display:block"><input name="a"></div></form>"#);
        let hidden = fp(r#"<form><div id="s" style="display: none"><input name="a"></div></form>"#);
        assert_ne!(shown.digest, hidden.digest);
        assert_eq!((shown.field_count, hidden.field_count), (1, 0));
    }

    #[test]
    fn empty_style_is_no_style() {
        assert_eq!(fp(r#"<form><div style=""></div></form>"#), fp("<form><div></div></form>"));
        assert_eq!(fp(r#"<form><div style="a:b;c:d"></div></form>"#), fp(r#"<form><div style="c: d; a: b;"></div></form>"#));
    }
}

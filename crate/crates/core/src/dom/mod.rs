//! HTML document model: parsing, serialization, locators, form extraction and fingerprints.

mod fingerprint;
mod form;
mod locate;
mod node;
mod parse;
pub(crate) mod serialize;

pub use fingerprint::{fingerprint, fingerprint_at, normalized_html, to_hex, StateFingerprint};
pub use form::{
    extract_forms, fields_in, find_interactable_elements, hides_self, interactable_paths, is_enabled,
    is_visible, resolve_scope, style_declarations, Constraints, ControlType, FieldDescriptor, FormModel,
    Required,
};
pub use locate::{css_attr_equals, emit_ref, structural_path, CssSelector, ElementRef, SelectorError, Strategy, XPath};
pub use node::{Attribute, Element, HtmlDocument, Node, NodePath};
pub use parse::parse_document;

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomError {
    #[error("scope {0} matches no element")]
    ScopeNotFound(String),
    #[error("scope {scope} matches {count} elements, expected one")]
    ScopeAmbiguous { scope: String, count: usize },
}

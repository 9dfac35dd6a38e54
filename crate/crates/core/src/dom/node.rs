use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Position of an element in a document, as child indices from the root `html` element.
pub type NodePath = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: String,
    pub attrs: Vec<Attribute>,
    pub children: Vec<Node>,
}

pub(crate) const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track",
    "wbr",
];

pub(crate) fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

impl Element {
    pub fn new(tag: impl Into<String>) -> Self {
        Element { tag: tag.into(), attrs: Vec::new(), children: Vec::new() }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|a| a.name == name).map(|a| a.value.as_str())
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attrs.iter().any(|a| a.name == name)
    }

    pub fn set_attr(&mut self, name: &str, value: impl Into<String>) {
        let value = value.into();
        match self.attrs.iter_mut().find(|a| a.name == name) {
            Some(a) => a.value = value,
            None => self.attrs.push(Attribute { name: name.to_string(), value }),
        }
    }

    pub fn remove_attr(&mut self, name: &str) -> bool {
        let before = self.attrs.len();
        self.attrs.retain(|a| a.name != name);
        before != self.attrs.len()
    }

    pub fn id(&self) -> Option<&str> {
        self.attr("id").filter(|v| !v.is_empty())
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.attr("class").unwrap_or("").split_ascii_whitespace()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes().any(|c| c == class)
    }

    /// Lowercased `type` attribute of an `input`, defaulting to `text`.
    pub fn input_type(&self) -> Option<String> {
        if self.tag != "input" {
            return None;
        }
        Some(self.attr("type").map(|t| t.trim().to_ascii_lowercase()).unwrap_or_else(|| "text".into()))
    }

    pub fn child_elements(&self) -> impl Iterator<Item = (usize, &Element)> {
        self.children.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Element(e) => Some((i, e)),
            Node::Text(_) => None,
        })
    }

    /// Concatenated descendant text.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        collect_text(self, &mut out);
        out
    }

    /// Descendant text with whitespace runs collapsed and trimmed.
    pub fn normalized_text(&self) -> String {
        collapse_whitespace(&self.text_content())
    }

    pub fn descendant(&self, path: &[usize]) -> Option<&Element> {
        let mut cur = self;
        for &i in path {
            match cur.children.get(i)? {
                Node::Element(e) => cur = e,
                Node::Text(_) => return None,
            }
        }
        Some(cur)
    }

    pub fn descendant_mut(&mut self, path: &[usize]) -> Option<&mut Element> {
        let mut cur = self;
        for &i in path {
            match cur.children.get_mut(i)? {
                Node::Element(e) => cur = e,
                Node::Text(_) => return None,
            }
        }
        Some(cur)
    }

    /// Pre-order walk over this element and all element descendants, with paths relative to `self`.
    pub fn walk(&self) -> Vec<(NodePath, &Element)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        walk_into(self, &mut path, &mut out);
        out
    }
}

fn walk_into<'a>(el: &'a Element, path: &mut NodePath, out: &mut Vec<(NodePath, &'a Element)>) {
    out.push((path.clone(), el));
    for (i, child) in el.child_elements() {
        path.push(i);
        walk_into(child, path, out);
        path.pop();
    }
}

fn collect_text(el: &Element, out: &mut String) {
    for child in &el.children {
        match child {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => collect_text(e, out),
        }
    }
}

pub(crate) fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// A parsed HTML document. The root is always an `html` element whose children are an optional
/// `head` followed by exactly one `body`.
#[derive(Debug, Clone)]
pub struct HtmlDocument {
    pub(crate) root: Element,
    pub(crate) source_length: usize,
}

impl PartialEq for HtmlDocument {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Eq for HtmlDocument {}

impl HtmlDocument {
    pub fn root(&self) -> &Element {
        &self.root
    }

    pub fn root_mut(&mut self) -> &mut Element {
        &mut self.root
    }

    /// Number of characters in the text this document was parsed from.
    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn element(&self, path: &[usize]) -> Option<&Element> {
        self.root.descendant(path)
    }

    pub fn element_mut(&mut self, path: &[usize]) -> Option<&mut Element> {
        self.root.descendant_mut(path)
    }

    pub fn body_path(&self) -> NodePath {
        self.root
            .child_elements()
            .find(|(_, e)| e.tag == "body")
            .map(|(i, _)| alloc::vec![i])
            .unwrap_or_default()
    }

    pub fn body(&self) -> &Element {
        let path = self.body_path();
        self.element(&path).unwrap_or(&self.root)
    }

    pub fn title(&self) -> Option<String> {
        self.root
            .walk()
            .into_iter()
            .find(|(_, e)| e.tag == "title")
            .map(|(_, e)| e.normalized_text())
    }

    pub fn walk(&self) -> Vec<(NodePath, &Element)> {
        self.root.walk()
    }

    /// Elements on the path from the root down to (and including) the element at `path`.
    pub fn ancestry(&self, path: &[usize]) -> Vec<&Element> {
        let mut chain = Vec::with_capacity(path.len() + 1);
        let mut cur = &self.root;
        chain.push(cur);
        for &i in path {
            match cur.children.get(i) {
                Some(Node::Element(e)) => {
                    cur = e;
                    chain.push(cur);
                }
                _ => break,
            }
        }
        chain
    }

    pub fn find_by_id(&self, id: &str) -> Option<NodePath> {
        self.walk().into_iter().find(|(_, e)| e.id() == Some(id)).map(|(p, _)| p)
    }

    pub fn to_html(&self) -> String {
        super::serialize::to_html(&self.root)
    }
}

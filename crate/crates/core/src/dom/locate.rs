//! Element locators: `id`, `name`, a CSS selector subset and an XPath subset.
//!
//! Supported CSS: type, `*`, `#id`, `.class`, `[attr]`, `[attr=value]`, `:nth-of-type(n)`,
//! `:nth-child(n)`, `:first-child`, the descendant and `>` combinators, and `,` lists.
//! Supported XPath: absolute or relative location paths with `/` and `//`, name tests or `*`,
//! and `[n]`, `[@attr]`, `[@attr='v']` predicates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::node::{Element, HtmlDocument, NodePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Css,
    Id,
    Name,
    Xpath,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Css => "css",
            Strategy::Id => "id",
            Strategy::Name => "name",
            Strategy::Xpath => "xpath",
        }
    }
}

/// A locator for one or more elements.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementRef {
    pub strategy: Strategy,
    pub value: String,
}

impl ElementRef {
    pub fn new(strategy: Strategy, value: impl Into<String>) -> Self {
        ElementRef { strategy, value: value.into() }
    }

    pub fn id(value: impl Into<String>) -> Self {
        Self::new(Strategy::Id, value)
    }

    pub fn name(value: impl Into<String>) -> Self {
        Self::new(Strategy::Name, value)
    }

    pub fn css(value: impl Into<String>) -> Self {
        Self::new(Strategy::Css, value)
    }

    pub fn xpath(value: impl Into<String>) -> Self {
        Self::new(Strategy::Xpath, value)
    }

    /// All matching elements in document order. Unparseable selectors match nothing.
    pub fn resolve(&self, doc: &HtmlDocument) -> Vec<NodePath> {
        match self.strategy {
            Strategy::Id => attr_equals(doc, "id", &self.value),
            Strategy::Name => attr_equals(doc, "name", &self.value),
            Strategy::Css => match CssSelector::parse(&self.value) {
                Ok(sel) => sel.select(doc),
                Err(_) => Vec::new(),
            },
            Strategy::Xpath => match XPath::parse(&self.value) {
                Ok(x) => x.select(doc),
                Err(_) => Vec::new(),
            },
        }
    }

    /// Matches restricted to `scope` and its descendants.
    pub fn resolve_within(&self, doc: &HtmlDocument, scope: &[usize]) -> Vec<NodePath> {
        self.resolve(doc).into_iter().filter(|p| p.starts_with(scope)).collect()
    }

    pub fn resolve_one(&self, doc: &HtmlDocument) -> Option<NodePath> {
        self.resolve(doc).into_iter().next()
    }

    pub fn label(&self) -> String {
        match self.strategy {
            Strategy::Id => format!("#{}", self.value),
            _ => self.value.clone(),
        }
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.strategy.as_str(), self.value)
    }
}

impl FromStr for ElementRef {
    type Err = core::convert::Infallible;

    /// `id=x`, `name=x`, `css=x`, `xpath=x`; anything else is taken as a CSS selector, or XPath
    /// when it starts with `/`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        for strategy in [Strategy::Css, Strategy::Id, Strategy::Name, Strategy::Xpath] {
            if let Some(rest) = s.strip_prefix(strategy.as_str()).and_then(|r| r.strip_prefix('=')) {
                return Ok(ElementRef::new(strategy, rest));
            }
        }
        if s.starts_with('/') {
            return Ok(ElementRef::xpath(s));
        }
        Ok(ElementRef::css(s))
    }
}

fn attr_equals(doc: &HtmlDocument, name: &str, value: &str) -> Vec<NodePath> {
    doc.walk().into_iter().filter(|(_, e)| e.attr(name) == Some(value)).map(|(p, _)| p).collect()
}

/// Locator for the element at `path`: its id when unique, else its name when unique, else a
/// structural CSS path. The result always resolves to exactly that element.
pub fn emit_ref(doc: &HtmlDocument, path: &[usize]) -> ElementRef {
    let Some(el) = doc.element(path) else {
        return ElementRef::css(structural_path(doc, path));
    };
    let all = doc.walk();
    if let Some(id) = el.id() {
        if all.iter().filter(|(_, e)| e.attr("id") == Some(id)).count() == 1 {
            return ElementRef::id(id);
        }
    }
    if let Some(name) = el.attr("name").filter(|n| !n.is_empty()) {
        if all.iter().filter(|(_, e)| e.attr("name") == Some(name)).count() == 1 {
            return ElementRef::name(name);
        }
    }
    ElementRef::css(structural_path(doc, path))
}

pub fn structural_path(doc: &HtmlDocument, path: &[usize]) -> String {
    let mut out = String::from("html");
    let mut cur: &Element = doc.root();
    for &i in path {
        let Some(super::node::Node::Element(child)) = cur.children.get(i) else { break };
        let position = cur
            .child_elements()
            .filter(|(j, e)| *j <= i && e.tag == child.tag)
            .count();
        out.push_str(&format!(" > {}:nth-of-type({})", css_ident(&child.tag), position));
        cur = child;
    }
    out
}

fn css_ident(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '-' || c == '_' || !c.is_ascii() {
            out.push(c);
        } else {
            out.push('\\');
            out.push(c);
        }
    }
    out
}

/// CSS for an attribute-equality test, quoting the value.
pub fn css_attr_equals(name: &str, value: &str) -> String {
    let mut escaped = String::new();
    for c in value.chars() {
        if c == '"' || c == '\\' {
            escaped.push('\\');
        }
        escaped.push(c);
    }
    format!("[{}=\"{}\"]", name, escaped)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combinator {
    Descendant,
    Child,
}

#[derive(Debug, Clone, Default)]
struct Compound {
    tag: Option<String>,
    ids: Vec<String>,
    classes: Vec<String>,
    attrs: Vec<(String, Option<String>)>,
    nth_of_type: Option<usize>,
    nth_child: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CssSelector {
    alternatives: Vec<Vec<(Combinator, Compound)>>,
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, _src: src }
    }
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }
    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }
    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.pos != start
    }
    fn ident(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c == '\\' {
                self.pos += 1;
                if let Some(n) = self.bump() {
                    out.push(n);
                }
            } else if c.is_alphanumeric() || c == '-' || c == '_' || !c.is_ascii() {
                out.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        out
    }
    fn quoted_or_ident(&mut self) -> Result<String, SelectorError> {
        match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SelectorError("unterminated string".into())),
                        Some('\\') => {
                            if let Some(n) = self.bump() {
                                out.push(n);
                            }
                        }
                        Some(c) if c == q => return Ok(out),
                        Some(c) => out.push(c),
                    }
                }
            }
            _ => Ok(self.ident()),
        }
    }
    fn number(&mut self) -> Result<usize, SelectorError> {
        let mut digits = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            digits.push(c);
            self.pos += 1;
        }
        digits.parse().map_err(|_| SelectorError("expected a number".into()))
    }
    fn expect(&mut self, c: char) -> Result<(), SelectorError> {
        if self.bump() == Some(c) {
            Ok(())
        } else {
            Err(SelectorError(format!("expected '{}'", c)))
        }
    }
}

impl CssSelector {
    pub fn parse(src: &str) -> Result<Self, SelectorError> {
        let mut cur = Cursor::new(src);
        let mut alternatives = Vec::new();
        let mut current: Vec<(Combinator, Compound)> = Vec::new();
        let mut pending = Combinator::Descendant;
        cur.skip_ws();
        loop {
            let compound = parse_compound(&mut cur)?;
            current.push((pending, compound));
            let had_ws = cur.skip_ws();
            match cur.peek() {
                None => break,
                Some(',') => {
                    cur.pos += 1;
                    cur.skip_ws();
                    alternatives.push(core::mem::take(&mut current));
                    pending = Combinator::Descendant;
                }
                Some('>') => {
                    cur.pos += 1;
                    cur.skip_ws();
                    pending = Combinator::Child;
                }
                Some(_) if had_ws => pending = Combinator::Descendant,
                Some(c) => return Err(SelectorError(format!("unexpected '{}'", c))),
            }
        }
        alternatives.push(current);
        Ok(CssSelector { alternatives })
    }

    pub fn select(&self, doc: &HtmlDocument) -> Vec<NodePath> {
        doc.walk()
            .into_iter()
            .filter(|(p, _)| self.alternatives.iter().any(|alt| matches_from(doc, p, alt, alt.len() - 1)))
            .map(|(p, _)| p)
            .collect()
    }

    pub fn matches(&self, doc: &HtmlDocument, path: &[usize]) -> bool {
        self.alternatives.iter().any(|alt| matches_from(doc, path, alt, alt.len() - 1))
    }
}

fn parse_compound(cur: &mut Cursor<'_>) -> Result<Compound, SelectorError> {
    let mut c = Compound::default();
    let mut any = false;
    match cur.peek() {
        Some('*') => {
            cur.pos += 1;
            any = true;
        }
        Some(ch) if ch.is_alphabetic() || ch == '\\' => {
            c.tag = Some(cur.ident().to_ascii_lowercase());
            any = true;
        }
        _ => {}
    }
    loop {
        match cur.peek() {
            Some('#') => {
                cur.pos += 1;
                c.ids.push(cur.ident());
            }
            Some('.') => {
                cur.pos += 1;
                c.classes.push(cur.ident());
            }
            Some('[') => {
                cur.pos += 1;
                cur.skip_ws();
                let name = cur.ident().to_ascii_lowercase();
                cur.skip_ws();
                let value = if cur.peek() == Some('=') {
                    cur.pos += 1;
                    cur.skip_ws();
                    let v = cur.quoted_or_ident()?;
                    cur.skip_ws();
                    Some(v)
                } else {
                    None
                };
                cur.expect(']')?;
                if name.is_empty() {
                    return Err(SelectorError("empty attribute name".into()));
                }
                c.attrs.push((name, value));
            }
            Some(':') => {
                cur.pos += 1;
                let pseudo = cur.ident().to_ascii_lowercase();
                match pseudo.as_str() {
                    "nth-of-type" | "nth-child" => {
                        cur.expect('(')?;
                        cur.skip_ws();
                        let n = cur.number()?;
                        cur.skip_ws();
                        cur.expect(')')?;
                        if pseudo == "nth-of-type" {
                            c.nth_of_type = Some(n);
                        } else {
                            c.nth_child = Some(n);
                        }
                    }
                    "first-child" => c.nth_child = Some(1),
                    other => return Err(SelectorError(format!("unsupported pseudo-class :{}", other))),
                }
            }
            _ => break,
        }
        any = true;
    }
    if !any {
        return Err(SelectorError("empty compound selector".into()));
    }
    Ok(c)
}

fn sibling_positions(doc: &HtmlDocument, path: &[usize]) -> Option<(usize, usize)> {
    let (&last, parent_path) = path.split_last()?;
    let parent = doc.element(parent_path)?;
    let el = doc.element(path)?;
    let mut child_pos = 0;
    let mut type_pos = 0;
    for (i, e) in parent.child_elements() {
        if i > last {
            break;
        }
        child_pos += 1;
        if e.tag == el.tag {
            type_pos += 1;
        }
    }
    Some((child_pos, type_pos))
}

fn matches_compound(doc: &HtmlDocument, path: &[usize], c: &Compound) -> bool {
    let Some(el) = doc.element(path) else { return false };
    if c.tag.as_ref().is_some_and(|t| *t != el.tag) {
        return false;
    }
    if !c.ids.iter().all(|id| el.attr("id") == Some(id.as_str())) {
        return false;
    }
    if !c.classes.iter().all(|cl| el.has_class(cl)) {
        return false;
    }
    let attrs_ok = c.attrs.iter().all(|(name, value)| match value {
        None => el.has_attr(name),
        Some(v) => el.attr(name) == Some(v.as_str()),
    });
    if !attrs_ok {
        return false;
    }
    if c.nth_child.is_some() || c.nth_of_type.is_some() {
        let (child_pos, type_pos) = sibling_positions(doc, path).unwrap_or((1, 1));
        if c.nth_child.is_some_and(|n| n != child_pos) || c.nth_of_type.is_some_and(|n| n != type_pos) {
            return false;
        }
    }
    true
}

fn matches_from(doc: &HtmlDocument, path: &[usize], sel: &[(Combinator, Compound)], k: usize) -> bool {
    if !matches_compound(doc, path, &sel[k].1) {
        return false;
    }
    if k == 0 {
        return true;
    }
    if path.is_empty() {
        return false;
    }
    match sel[k].0 {
        Combinator::Child => matches_from(doc, &path[..path.len() - 1], sel, k - 1),
        Combinator::Descendant => {
            (0..path.len()).rev().any(|len| matches_from(doc, &path[..len], sel, k - 1))
        }
    }
}

#[derive(Debug, Clone)]
enum Predicate {
    Position(usize),
    HasAttr(String),
    AttrEquals(String, String),
}

#[derive(Debug, Clone)]
struct Step {
    descendant: bool,
    name: Option<String>,
    predicates: Vec<Predicate>,
}

#[derive(Debug, Clone)]
pub struct XPath {
    steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Doc,
    El(NodePath),
}

impl XPath {
    pub fn parse(src: &str) -> Result<Self, SelectorError> {
        let mut cur = Cursor::new(src.trim());
        let mut steps = Vec::new();
        let mut first = true;
        while cur.peek().is_some() {
            let descendant = if cur.peek() == Some('/') {
                cur.pos += 1;
                if cur.peek() == Some('/') {
                    cur.pos += 1;
                    true
                } else {
                    false
                }
            } else if first {
                false
            } else {
                return Err(SelectorError("expected '/'".into()));
            };
            first = false;
            let name = if cur.peek() == Some('*') {
                cur.pos += 1;
                None
            } else {
                let n = cur.ident().to_ascii_lowercase();
                if n.is_empty() {
                    return Err(SelectorError("expected a name test".into()));
                }
                Some(n)
            };
            let mut predicates = Vec::new();
            while cur.peek() == Some('[') {
                cur.pos += 1;
                cur.skip_ws();
                if cur.peek() == Some('@') {
                    cur.pos += 1;
                    let attr = cur.ident().to_ascii_lowercase();
                    cur.skip_ws();
                    if cur.peek() == Some('=') {
                        cur.pos += 1;
                        cur.skip_ws();
                        let v = cur.quoted_or_ident()?;
                        predicates.push(Predicate::AttrEquals(attr, v));
                    } else {
                        predicates.push(Predicate::HasAttr(attr));
                    }
                } else {
                    let n = cur.number()?;
                    if n == 0 {
                        return Err(SelectorError("positions start at 1".into()));
                    }
                    predicates.push(Predicate::Position(n));
                }
                cur.skip_ws();
                cur.expect(']')?;
            }
            steps.push(Step { descendant, name, predicates });
        }
        if steps.is_empty() {
            return Err(SelectorError("empty path".into()));
        }
        Ok(XPath { steps })
    }

    pub fn select(&self, doc: &HtmlDocument) -> Vec<NodePath> {
        let all: Vec<NodePath> = doc.walk().into_iter().map(|(p, _)| p).collect();
        let mut context = alloc::vec![Ctx::Doc];
        for step in &self.steps {
            if step.descendant {
                let mut expanded = alloc::vec![];
                for c in &context {
                    expanded.push(c.clone());
                    for p in &all {
                        let inside = match c {
                            Ctx::Doc => true,
                            Ctx::El(base) => p.len() > base.len() && p.starts_with(base),
                        };
                        if inside {
                            expanded.push(Ctx::El(p.clone()));
                        }
                    }
                }
                expanded.sort();
                expanded.dedup();
                context = expanded;
            }
            let mut next = Vec::new();
            for c in &context {
                let children: Vec<NodePath> = match c {
                    Ctx::Doc => alloc::vec![Vec::new()],
                    Ctx::El(p) => match doc.element(p) {
                        Some(el) => el
                            .child_elements()
                            .map(|(i, _)| {
                                let mut q = p.clone();
                                q.push(i);
                                q
                            })
                            .collect(),
                        None => Vec::new(),
                    },
                };
                let mut candidates: Vec<NodePath> = children
                    .into_iter()
                    .filter(|p| {
                        step.name.as_ref().is_none_or(|n| doc.element(p).is_some_and(|e| e.tag == *n))
                    })
                    .collect();
                for pred in &step.predicates {
                    candidates = match pred {
                        Predicate::Position(n) => candidates.get(n - 1).cloned().into_iter().collect(),
                        Predicate::HasAttr(a) => candidates
                            .into_iter()
                            .filter(|p| doc.element(p).is_some_and(|e| e.has_attr(a)))
                            .collect(),
                        Predicate::AttrEquals(a, v) => candidates
                            .into_iter()
                            .filter(|p| doc.element(p).is_some_and(|e| e.attr(a) == Some(v.as_str())))
                            .collect(),
                    };
                }
                next.extend(candidates.into_iter().map(Ctx::El));
            }
            next.sort();
            next.dedup();
            context = next;
        }
        context
            .into_iter()
            .filter_map(|c| match c {
                Ctx::El(p) => Some(p),
                Ctx::Doc => None,
            })
            .collect()
    }
}

impl Default for ElementRef {
    fn default() -> Self {
        ElementRef::css("form")
    }
}

impl From<&str> for ElementRef {
    fn from(s: &str) -> Self {
        s.parse().unwrap_or_else(|_| ElementRef::css(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_document;

    const PAGE: &str = r#"<form id="f"><div class="row a"><input name="x" id="x1"><input name="y"></div>
        <div class="row"><select name="s"><option value="1">1</option></select><input name="y"></div></form>"#;

    fn tags(doc: &HtmlDocument, paths: &[NodePath]) -> Vec<String> {
        paths.iter().map(|p| doc.element(p).unwrap().tag.clone()).collect()
    }

    #[test]
    fn css_subset() {
        let doc = parse_document(PAGE);
        assert_eq!(ElementRef::css("#f input").resolve(&doc).len(), 3);
        assert_eq!(ElementRef::css("form > div.a > input").resolve(&doc).len(), 2);
        assert_eq!(ElementRef::css("div:nth-of-type(2) [name=\"y\"]").resolve(&doc).len(), 1);
        assert_eq!(tags(&doc, &ElementRef::css("select, #x1").resolve(&doc)), ["input", "select"]);
        assert!(ElementRef::css("div:hover").resolve(&doc).is_empty());
        assert!(ElementRef::css("").resolve(&doc).is_empty());
    }

    #[test]
    fn xpath_subset() {
        let doc = parse_document(PAGE);
        assert_eq!(ElementRef::xpath("//input").resolve(&doc).len(), 3);
        assert_eq!(ElementRef::xpath("/html/body/form/div[2]/input").resolve(&doc).len(), 1);
        assert_eq!(ElementRef::xpath("//*[@name='s']").resolve(&doc).len(), 1);
        assert_eq!(ElementRef::xpath("//div[1]/input[2]").resolve(&doc).len(), 1);
        assert!(ElementRef::xpath("//input[0]").resolve(&doc).is_empty());
    }

    #[test]
    fn emitted_refs_are_unique() {
        let doc = parse_document(PAGE);
        for (path, _) in doc.walk() {
            let r = emit_ref(&doc, &path);
            assert_eq!(r.resolve(&doc), alloc::vec![path.clone()], "{}", r);
        }
        let (p, _) = doc.walk().into_iter().find(|(_, e)| e.attr("id") == Some("x1")).unwrap();
        assert_eq!(emit_ref(&doc, &p), ElementRef::id("x1"));
        let (p, _) = doc.walk().into_iter().find(|(_, e)| e.tag == "select").unwrap();
        assert_eq!(emit_ref(&doc, &p), ElementRef::name("s"));
    }

    #[test]
    fn parse_locator_strings() {
        assert_eq!("id=a".parse::<ElementRef>().unwrap(), ElementRef::id("a"));
        assert_eq!("#a".parse::<ElementRef>().unwrap(), ElementRef::css("#a"));
        assert_eq!("//form".parse::<ElementRef>().unwrap(), ElementRef::xpath("//form"));
    }
}

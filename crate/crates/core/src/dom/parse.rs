//! Error-recovering HTML parser.
//!
//! The recovery rules are a simplified subset of the HTML5 tree-construction algorithm: void
//! elements, raw-text elements, implied end tags for `p`/`li`/`option`/table cells, and ignored
//! stray end tags. Every rule is written so that serializing the resulting tree and parsing it
//! again reproduces the same tree.

use alloc::string::String;
use alloc::vec::Vec;

use super::node::{is_void, Attribute, Element, HtmlDocument, Node};

const SCOPE_BOUNDARY: &[&str] =
    &["applet", "caption", "html", "table", "td", "th", "marquee", "object", "template"];

const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "details", "dd", "div", "dl", "dt", "fieldset",
    "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main",
    "menu", "nav", "ol", "p", "pre", "section", "table", "ul",
];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

pub(crate) fn is_raw_text(tag: &str) -> bool {
    matches!(tag, "script" | "style")
}

pub(crate) fn is_rcdata(tag: &str) -> bool {
    matches!(tag, "textarea" | "title")
}

/// Parse arbitrary text into a document. Never fails.
pub fn parse_document(html: &str) -> HtmlDocument {
    let source_length = html.chars().count();
    let chars: Vec<char> = normalize_newlines(html);
    let mut tokenizer = Tokenizer { input: &chars, pos: 0 };
    let mut builder = TreeBuilder { stack: alloc::vec![Element::new("html")] };

    while let Some(token) = tokenizer.next_token() {
        match token {
            Token::Text(text) => builder.append_text(&text),
            Token::EndTag(name) => builder.end_tag(&name),
            Token::StartTag { name, attrs } => {
                if builder.start_tag(&name, attrs) && (is_raw_text(&name) || is_rcdata(&name)) {
                    let raw = tokenizer.read_raw_text(&name);
                    let text = if is_rcdata(&name) { decode_entities(&raw) } else { raw };
                    builder.append_text(&text);
                    builder.pop();
                }
            }
        }
    }

    HtmlDocument { root: builder.finish(), source_length }
}

fn normalize_newlines(input: &str) -> Vec<char> {
    let mut out = Vec::with_capacity(input.len());
    let mut chars = input.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\r' {
            if chars.peek() == Some(&'\n') {
                chars.next();
            }
            out.push('\n');
        } else {
            out.push(c);
        }
    }
    out
}

enum Token {
    StartTag { name: String, attrs: Vec<Attribute> },
    EndTag(String),
    Text(String),
}

struct Tokenizer<'a> {
    input: &'a [char],
    pos: usize,
}

fn is_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\x0C')
}

impl<'a> Tokenizer<'a> {
    fn peek(&self) -> Option<char> {
        self.input.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.input.get(self.pos + offset).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.input.get(self.pos + k) == Some(&c))
    }

    fn skip_past(&mut self, terminator: &str) {
        while self.pos < self.input.len() {
            if self.starts_with(terminator) {
                self.pos += terminator.chars().count();
                return;
            }
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            let c = self.peek()?;
            if c != '<' {
                return Some(Token::Text(self.read_text()));
            }
            match self.peek_at(1) {
                Some(n) if n.is_ascii_alphabetic() => {
                    self.pos += 1;
                    match self.read_tag() {
                        Some((name, attrs)) => return Some(Token::StartTag { name, attrs }),
                        None => return None,
                    }
                }
                Some('/') => match self.peek_at(2) {
                    Some(n) if n.is_ascii_alphabetic() => {
                        self.pos += 2;
                        match self.read_tag() {
                            Some((name, _)) => return Some(Token::EndTag(name)),
                            None => return None,
                        }
                    }
                    Some('>') => self.pos += 3,
                    Some(_) => self.skip_past(">"),
                    None => {
                        self.pos += 2;
                        return Some(Token::Text("</".into()));
                    }
                },
                Some('!') => {
                    if self.starts_with("<!--") {
                        self.pos += 4;
                        if self.peek() == Some('>') {
                            self.pos += 1;
                        } else if self.starts_with("->") {
                            self.pos += 2;
                        } else {
                            self.skip_past("-->");
                        }
                    } else {
                        self.skip_past(">");
                    }
                }
                Some('?') => self.skip_past(">"),
                _ => return Some(Token::Text(self.read_text())),
            }
        }
    }

    /// Text up to the next `<` that opens markup. A lone `<` is taken literally.
    fn read_text(&mut self) -> String {
        let mut raw = String::new();
        while let Some(c) = self.peek() {
            if c == '<' && self.opens_markup() {
                break;
            }
            raw.push(c);
            self.pos += 1;
        }
        decode_entities(&raw)
    }

    fn opens_markup(&self) -> bool {
        match self.peek_at(1) {
            Some(n) if n.is_ascii_alphabetic() => true,
            Some('!') | Some('?') => true,
            Some('/') => self.peek_at(2).is_some(),
            _ => false,
        }
    }

    /// Reads a tag name and attribute list after the opening `<` or `</`. Returns `None` when the
    /// input ends inside the tag, in which case the tag is discarded.
    fn read_tag(&mut self) -> Option<(String, Vec<Attribute>)> {
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if is_space(c) || c == '/' || c == '>' {
                break;
            }
            name.push(c.to_ascii_lowercase());
            self.pos += 1;
        }
        let mut attrs: Vec<Attribute> = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if is_space(c) || c == '/' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            match self.peek()? {
                '>' => {
                    self.pos += 1;
                    return Some((name, attrs));
                }
                first => {
                    let mut attr_name = String::new();
                    attr_name.push(first.to_ascii_lowercase());
                    self.pos += 1;
                    while let Some(c) = self.peek() {
                        if is_space(c) || c == '/' || c == '>' || c == '=' {
                            break;
                        }
                        attr_name.push(c.to_ascii_lowercase());
                        self.pos += 1;
                    }
                    while self.peek().is_some_and(is_space) {
                        self.pos += 1;
                    }
                    let mut value = String::new();
                    if self.peek() == Some('=') {
                        self.pos += 1;
                        while self.peek().is_some_and(is_space) {
                            self.pos += 1;
                        }
                        match self.peek()? {
                            q @ ('"' | '\'') => {
                                self.pos += 1;
                                loop {
                                    let c = self.peek()?;
                                    self.pos += 1;
                                    if c == q {
                                        break;
                                    }
                                    value.push(c);
                                }
                            }
                            '>' => {}
                            _ => {
                                while let Some(c) = self.peek() {
                                    if is_space(c) || c == '>' {
                                        break;
                                    }
                                    value.push(c);
                                    self.pos += 1;
                                }
                            }
                        }
                    }
                    if !attrs.iter().any(|a| a.name == attr_name) {
                        attrs.push(Attribute { name: attr_name, value: decode_entities(&value) });
                    }
                }
            }
        }
    }

    /// Content of a raw-text element up to (not including) its end tag.
    fn read_raw_text(&mut self, tag: &str) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c == '<' && self.peek_at(1) == Some('/') && self.matches_end_tag(tag) {
                break;
            }
            out.push(c);
            self.pos += 1;
        }
        out
    }

    fn matches_end_tag(&self, tag: &str) -> bool {
        let mut i = self.pos + 2;
        for t in tag.chars() {
            match self.input.get(i) {
                Some(c) if c.to_ascii_lowercase() == t => i += 1,
                _ => return false,
            }
        }
        match self.input.get(i) {
            None => true,
            Some(&c) => is_space(c) || c == '/' || c == '>',
        }
    }
}

const NAMED_ENTITIES: &[(&str, char)] = &[
    ("amp", '&'),
    ("lt", '<'),
    ("gt", '>'),
    ("quot", '"'),
    ("apos", '\''),
    ("nbsp", '\u{a0}'),
    ("copy", '\u{a9}'),
    ("reg", '\u{ae}'),
    ("hellip", '\u{2026}'),
    ("mdash", '\u{2014}'),
    ("ndash", '\u{2013}'),
    ("laquo", '\u{ab}'),
    ("raquo", '\u{bb}'),
    ("times", '\u{d7}'),
    ("middot", '\u{b7}'),
];

/// Decodes `&name;`, `&#NNN;` and `&#xHH;` references. Anything unrecognized is kept literally.
pub(crate) fn decode_entities(raw: &str) -> String {
    if !raw.contains('&') {
        return String::from(raw);
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let end = rest[1..].find(';').map(|i| i + 1);
        let decoded = end.and_then(|end| {
            let body = &rest[1..end];
            if body.is_empty() || body.len() > 10 {
                return None;
            }
            let c = if let Some(num) = body.strip_prefix('#') {
                let code = if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
                    u32::from_str_radix(hex, 16).ok()?
                } else {
                    num.parse::<u32>().ok()?
                };
                match char::from_u32(code) {
                    Some(c) if code != 0 => c,
                    _ => '\u{fffd}',
                }
            } else {
                NAMED_ENTITIES.iter().find(|(n, _)| *n == body)?.1
            };
            Some((c, end + 1))
        });
        match decoded {
            Some((c, consumed)) => {
                out.push(c);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

struct TreeBuilder {
    stack: Vec<Element>,
}

impl TreeBuilder {
    fn top(&mut self) -> &mut Element {
        self.stack.last_mut().expect("root is never popped")
    }

    fn append_text(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        let top = self.top();
        if let Some(Node::Text(last)) = top.children.last_mut() {
            last.push_str(text);
        } else {
            top.children.push(Node::Text(String::from(text)));
        }
    }

    fn pop(&mut self) {
        if self.stack.len() > 1 {
            let el = self.stack.pop().expect("checked length");
            self.top().children.push(Node::Element(el));
        }
    }

    fn pop_to(&mut self, index: usize) {
        while self.stack.len() > index.max(1) {
            self.pop();
        }
    }

    fn find_open(&self, matches: impl Fn(&str) -> bool, boundary: &[&str]) -> Option<usize> {
        for i in (1..self.stack.len()).rev() {
            let tag = self.stack[i].tag.as_str();
            if matches(tag) {
                return Some(i);
            }
            if boundary.contains(&tag) {
                return None;
            }
        }
        None
    }

    /// Returns `true` when an element was opened (and is still on the stack unless void).
    fn start_tag(&mut self, name: &str, attrs: Vec<Attribute>) -> bool {
        match name {
            "html" => {
                let root = &mut self.stack[0];
                for a in attrs {
                    if !root.has_attr(&a.name) {
                        root.attrs.push(a);
                    }
                }
                return false;
            }
            "head" | "body" => {
                let exists = self.stack[0].child_elements().any(|(_, e)| e.tag == name);
                if self.stack.len() != 1 || exists {
                    return false;
                }
            }
            "form" if self.find_open(|t| t == "form", &[]).is_some() => return false,
            "select" => {
                if let Some(i) = self.find_open(|t| t == "select", &[]) {
                    self.pop_to(i);
                    return false;
                }
            }
            _ => {}
        }
        while self.implied_close(name) {}

        self.stack.push(Element { tag: String::from(name), attrs, children: Vec::new() });
        if is_void(name) {
            self.pop();
            return false;
        }
        true
    }

    /// Applies one implied-end-tag rule for an incoming start tag. Returns whether anything closed.
    fn implied_close(&mut self, name: &str) -> bool {
        let mut button_scope: Vec<&str> = SCOPE_BOUNDARY.to_vec();
        button_scope.push("button");

        let found = match name {
            "li" => self.find_open(|t| t == "li", &[SCOPE_BOUNDARY, &["ul", "ol", "menu"]].concat()),
            "dt" | "dd" => {
                self.find_open(|t| t == "dt" || t == "dd", &[SCOPE_BOUNDARY, &["dl"]].concat())
            }
            "tr" => self.find_open(
                |t| matches!(t, "tr" | "td" | "th"),
                &[SCOPE_BOUNDARY, &["tbody", "thead", "tfoot"]].concat(),
            ),
            "td" | "th" => {
                self.find_open(|t| t == "td" || t == "th", &[SCOPE_BOUNDARY, &["tr"]].concat())
            }
            "thead" | "tbody" | "tfoot" => {
                self.find_open(|t| matches!(t, "thead" | "tbody" | "tfoot"), &["table"])
            }
            "a" => self.find_open(|t| t == "a", &[]),
            "button" => self.find_open(|t| t == "button", SCOPE_BOUNDARY),
            "option" => self.top_is(&["option"]),
            "optgroup" => self.top_is(&["option", "optgroup"]),
            _ => None,
        };
        if let Some(i) = found {
            self.pop_to(i);
            return true;
        }
        if CLOSES_P.contains(&name) {
            if let Some(i) = self.find_open(|t| t == "p", &button_scope) {
                self.pop_to(i);
                return true;
            }
        }
        if HEADINGS.contains(&name) && self.top_is(HEADINGS).is_some() {
            self.pop();
            return true;
        }
        false
    }

    fn top_is(&self, tags: &[&str]) -> Option<usize> {
        let i = self.stack.len() - 1;
        (i > 0 && tags.contains(&self.stack[i].tag.as_str())).then_some(i)
    }

    fn end_tag(&mut self, name: &str) {
        if name == "html" || is_void(name) {
            return;
        }
        if let Some(i) = self.find_open(|t| t == name, &[]) {
            self.pop_to(i);
        }
    }

    /// Closes everything and moves stray root-level content into `body`.
    fn finish(mut self) -> Element {
        self.pop_to(1);
        let mut root = self.stack.pop().expect("root");
        let children = core::mem::take(&mut root.children);
        let mut head = None;
        let mut body: Option<Element> = None;
        let mut before = Vec::new();
        let mut after = Vec::new();
        for node in children {
            match node {
                Node::Element(e) if e.tag == "head" && head.is_none() => head = Some(e),
                Node::Element(e) if e.tag == "body" && body.is_none() => body = Some(e),
                other if body.is_none() => before.push(other),
                other => after.push(other),
            }
        }
        let mut body = body.unwrap_or_else(|| Element::new("body"));
        let mut merged = before;
        merged.append(&mut body.children);
        merged.extend(after);
        body.children = merge_text(merged);
        if let Some(h) = head {
            root.children.push(Node::Element(h));
        }
        root.children.push(Node::Element(body));
        root
    }
}

fn merge_text(nodes: Vec<Node>) -> Vec<Node> {
    let mut out: Vec<Node> = Vec::with_capacity(nodes.len());
    for node in nodes {
        match (out.last_mut(), node) {
            (Some(Node::Text(prev)), Node::Text(t)) => prev.push_str(&t),
            (_, n) => out.push(n),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn body_tags(doc: &HtmlDocument) -> Vec<String> {
        doc.body().child_elements().map(|(_, e)| e.tag.clone()).collect()
    }

    #[test]
    fn empty_input_has_empty_body() {
        let doc = parse_document("");
        assert_eq!(doc.root().tag, "html");
        assert!(doc.body().children.is_empty());
        assert_eq!(doc.source_length(), 0);
    }

    #[test]
    fn minimal_form() {
        let doc = parse_document("<form><input type='text' name='a'></form>");
        let form = doc.body().child_elements().next().unwrap().1;
        assert_eq!(form.tag, "form");
        let inputs: Vec<_> = form.child_elements().collect();
        assert_eq!(inputs.len(), 1);
        assert_eq!(inputs[0].1.attr("name"), Some("a"));
    }

    #[test]
    fn implied_end_tags() {
        let doc = parse_document("<ul><li>a<li>b</ul><p>x<div>y</div>");
        let ul = doc.body().child_elements().next().unwrap().1;
        assert_eq!(ul.child_elements().count(), 2);
        assert_eq!(body_tags(&doc), ["ul", "p", "div"]);

        let doc = parse_document("<select><option>a<option>b</select>");
        let select = doc.body().child_elements().next().unwrap().1;
        assert_eq!(select.child_elements().count(), 2);
    }

    #[test]
    fn stray_end_tags_and_comments_are_dropped() {
        let doc = parse_document("a</span><!-- c -->b<!DOCTYPE html>c");
        assert_eq!(doc.body().children, vec![Node::Text("abc".into())]);
    }

    #[test]
    fn unterminated_tag_is_discarded() {
        let doc = parse_document("<div>x<input name=\"a");
        let div = doc.body().child_elements().next().unwrap().1;
        assert_eq!(div.children, vec![Node::Text("x".into())]);
    }

    #[test]
    fn raw_text_and_entities() {
        let doc = parse_document("<script>if (a < b) {}</script><p>&lt;&amp;&bogus; &#65;</p>");
        let (_, script) = doc.body().child_elements().next().unwrap();
        assert_eq!(script.text_content(), "if (a < b) {}");
        let (_, p) = doc.body().child_elements().nth(1).unwrap();
        assert_eq!(p.text_content(), "<&&bogus; A");
    }

    #[test]
    fn nested_forms_are_flattened() {
        let doc = parse_document("<form id=a><form id=b><input></form>");
        let forms: Vec<_> = doc.walk().into_iter().filter(|(_, e)| e.tag == "form").collect();
        assert_eq!(forms.len(), 1);
    }

    #[test]
    fn head_and_body_are_normalized() {
        let doc = parse_document("<html lang=en><head><title>T</title></head>x<body>y</body>z");
        let tags: Vec<_> = doc.root().child_elements().map(|(_, e)| e.tag.as_str()).collect();
        assert_eq!(tags, ["head", "body"]);
        assert_eq!(doc.body().text_content(), "xyz");
        assert_eq!(doc.root().attr("lang"), Some("en"));
        assert_eq!(doc.title().as_deref(), Some("T"));
    }

    #[test]
    fn crlf_is_normalized() {
        let doc = parse_document("a\r\nb\rc");
        assert_eq!(doc.body().text_content(), "a\nb\nc");
    }
}

//! W3C WebDriver client over a pluggable HTTP [`Transport`].
//!
//! Endpoints used: new session, navigate to, get current URL, find element(s) (from the document
//! and from an element), element click, element clear, element send keys, get element attribute,
//! get element property, get page source and delete session.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{json, Value};

use super::{invalid_fields, Action, BackendKind, BrowserError, Session, SessionConfig};
use crate::dom::{css_attr_equals, parse_document, resolve_scope, ControlType, ElementRef, FieldDescriptor, Strategy};

/// Controls that submit their form when clicked.
const SUBMIT_BUTTONS: &str = "button[type=\"submit\"], button:not([type]), input[type=\"submit\"], input[type=\"image\"]";

/// Key of the web element reference in WebDriver JSON.
pub const ELEMENT_KEY: &str = "element-6066-11e4-a07c-4a1d4f2b8fb0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HttpMethod {
    Get,
    Post,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// One HTTP exchange with the remote end. `path` is relative to the driver endpoint.
pub trait Transport {
    fn request(&mut self, method: HttpMethod, path: &str, body: Option<&Value>) -> Result<(u16, Value), TransportError>;

    /// Block for `ms` milliseconds. Used for the politeness delay.
    fn sleep_ms(&mut self, _ms: u64) {}
}

pub struct WebDriverSession<T: Transport> {
    transport: T,
    config: SessionConfig,
    session_id: String,
}

fn map_error(status: u16, body: &Value) -> BrowserError {
    let value = &body["value"];
    let code = value["error"].as_str().unwrap_or("");
    let message = value["message"].as_str().unwrap_or("").to_string();
    let detail = if message.is_empty() { format!("HTTP {}", status) } else { message };
    match code {
        "no such element" | "stale element reference" => BrowserError::ElementNotFound(detail),
        "element not interactable" | "element click intercepted" => BrowserError::ElementNotInteractable(detail),
        "invalid element state" | "invalid argument" => BrowserError::InvalidAction(detail),
        "timeout" | "script timeout" => BrowserError::Timeout(detail),
        "invalid session id" | "session not created" => BrowserError::SessionLost(detail),
        "invalid selector" => BrowserError::ElementNotFound(detail),
        _ => BrowserError::Protocol(format!("{} ({})", detail, if code.is_empty() { "unknown error" } else { code })),
    }
}

/// WebDriver locator strategy and value for a ref.
pub fn locator_json(target: &ElementRef) -> Value {
    let (using, value) = match target.strategy {
        Strategy::Css => ("css selector", target.value.clone()),
        Strategy::Xpath => ("xpath", target.value.clone()),
        Strategy::Id => ("css selector", css_attr_equals("id", &target.value)),
        Strategy::Name => ("css selector", css_attr_equals("name", &target.value)),
    };
    json!({ "using": using, "value": value })
}

impl<T: Transport> WebDriverSession<T> {
    /// Open a session with the given capabilities (`alwaysMatch` object).
    pub fn connect(mut transport: T, config: SessionConfig, capabilities: Value) -> Result<Self, BrowserError> {
        config.validate().map_err(BrowserError::InvalidAction)?;
        let body = json!({ "capabilities": { "alwaysMatch": capabilities } });
        let (status, reply) = transport.request(HttpMethod::Post, "/session", Some(&body)).map_err(transport_error)?;
        if status != 200 {
            return Err(map_error(status, &reply));
        }
        let session_id = reply["value"]["sessionId"]
            .as_str()
            .ok_or_else(|| BrowserError::Protocol("new session reply has no sessionId".into()))?
            .to_string();
        let mut session = WebDriverSession { transport, config, session_id };
        let timeouts = json!({
            "implicit": 0,
            "pageLoad": session.config.page_load_timeout_ms,
            "script": session.config.command_timeout_ms,
        });
        session.call(HttpMethod::Post, "/timeouts", Some(timeouts))?;
        Ok(session)
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn call(&mut self, method: HttpMethod, path: &str, body: Option<Value>) -> Result<Value, BrowserError> {
        let full = format!("/session/{}{}", self.session_id, path);
        let body = match (method, body) {
            (HttpMethod::Post, None) => Some(json!({})),
            (_, b) => b,
        };
        let (status, reply) = self.transport.request(method, &full, body.as_ref()).map_err(transport_error)?;
        if status == 200 {
            Ok(reply.get("value").cloned().unwrap_or(Value::Null))
        } else {
            Err(map_error(status, &reply))
        }
    }

    fn element_ids(value: &Value) -> Vec<String> {
        value
            .as_array()
            .map(|items| items.iter().filter_map(|v| v[ELEMENT_KEY].as_str().map(String::from)).collect())
            .unwrap_or_default()
    }

    fn find_all(&mut self, target: &ElementRef, from: Option<&str>) -> Result<Vec<String>, BrowserError> {
        let path = match from {
            Some(id) => format!("/element/{}/elements", id),
            None => "/elements".to_string(),
        };
        let reply = self.call(HttpMethod::Post, &path, Some(locator_json(target)))?;
        Ok(Self::element_ids(&reply))
    }

    fn find(&mut self, target: &ElementRef) -> Result<String, BrowserError> {
        self.find_all(target, None)?.into_iter().next().ok_or_else(|| BrowserError::ElementNotFound(target.to_string()))
    }

    fn attribute(&mut self, element: &str, name: &str) -> Result<Option<String>, BrowserError> {
        let v = self.call(HttpMethod::Get, &format!("/element/{}/attribute/{}", element, name), None)?;
        Ok(v.as_str().map(String::from))
    }

    fn property(&mut self, element: &str, name: &str) -> Result<Value, BrowserError> {
        self.call(HttpMethod::Get, &format!("/element/{}/property/{}", element, name), None)
    }

    fn click_element(&mut self, element: &str) -> Result<(), BrowserError> {
        self.call(HttpMethod::Post, &format!("/element/{}/click", element), None).map(|_| ())
    }

    fn field_value(&mut self, field: &FieldDescriptor) -> Result<String, BrowserError> {
        match field.control {
            ControlType::Checkbox | ControlType::Radio => {
                let target = if field.control == ControlType::Radio && !field.name.is_empty() {
                    ElementRef::css(format!("input[type=\"radio\"]{}", css_attr_equals("name", &field.name)))
                } else {
                    field.locator.clone()
                };
                for id in self.find_all(&target, None)? {
                    if self.property(&id, "checked")?.as_bool() == Some(true) {
                        let v = self.property(&id, "value")?;
                        return Ok(v.as_str().unwrap_or("on").to_string());
                    }
                }
                Ok(String::new())
            }
            _ => {
                let id = self.find(&field.locator)?;
                Ok(self.property(&id, "value")?.as_str().unwrap_or("").to_string())
            }
        }
    }
}

fn transport_error(e: TransportError) -> BrowserError {
    match e {
        TransportError::Timeout => BrowserError::Timeout("transport".into()),
        TransportError::Connection(m) => BrowserError::SessionLost(m),
        TransportError::Malformed(m) => BrowserError::Protocol(m),
    }
}

impl<T: Transport> Session for WebDriverSession<T> {
    fn backend(&self) -> BackendKind {
        BackendKind::Webdriver
    }

    fn config(&self) -> &SessionConfig {
        &self.config
    }

    fn navigate(&mut self, url: &str) -> Result<(), BrowserError> {
        if self.config.politeness_delay_ms > 0 {
            self.transport.sleep_ms(self.config.politeness_delay_ms);
        }
        self.call(HttpMethod::Post, "/url", Some(json!({ "url": url }))).map(|_| ())
    }

    fn current_url(&mut self) -> Result<String, BrowserError> {
        let v = self.call(HttpMethod::Get, "/url", None)?;
        let raw = v.as_str().ok_or_else(|| BrowserError::Protocol("current url is not a string".into()))?;
        Ok(crate::site::url::canonicalize(raw, None).unwrap_or_else(|_| raw.to_string()))
    }

    fn page_source(&mut self) -> Result<String, BrowserError> {
        let v = self.call(HttpMethod::Get, "/source", None)?;
        v.as_str().map(String::from).ok_or_else(|| BrowserError::Protocol("page source is not a string".into()))
    }

    fn interact(&mut self, target: &ElementRef, action: &Action) -> Result<(), BrowserError> {
        let element = self.find(target)?;
        match action {
            Action::Click | Action::Toggle => self.click_element(&element),
            Action::SetValue(v) => {
                self.call(HttpMethod::Post, &format!("/element/{}/clear", element), None)?;
                self.call(HttpMethod::Post, &format!("/element/{}/value", element), Some(json!({ "text": v })))
                    .map(|_| ())
            }
            Action::SelectOption(v) => {
                let tag = self.call(HttpMethod::Get, &format!("/element/{}/name", element), None)?;
                let option = if tag.as_str() == Some("select") {
                    let by_value = ElementRef::css(format!("option{}", css_attr_equals("value", v)));
                    self.find_all(&by_value, Some(&element))?.into_iter().next()
                } else {
                    let name = self.attribute(&element, "name")?.unwrap_or_default();
                    let radio = ElementRef::css(format!(
                        "input[type=\"radio\"]{}{}",
                        css_attr_equals("name", &name),
                        css_attr_equals("value", v)
                    ));
                    self.find_all(&radio, None)?.into_iter().next()
                };
                let option = option.ok_or_else(|| BrowserError::ValueRejected(format!("no option {:?}", v)))?;
                self.click_element(&option)
            }
            Action::Submit => {
                let tag = self.call(HttpMethod::Get, &format!("/element/{}/name", element), None)?;
                if tag.as_str() != Some("form") {
                    return self.click_element(&element);
                }
                let buttons = ElementRef::css(SUBMIT_BUTTONS);
                let button = self.find_all(&buttons, Some(&element))?.into_iter().next();
                let button = button.ok_or_else(|| BrowserError::InvalidAction(format!("{} has no submit button", target)))?;
                self.click_element(&button)
            }
        }
    }

    fn validation_errors(&mut self, scope: &ElementRef) -> Result<Vec<FieldDescriptor>, BrowserError> {
        let doc = parse_document(&self.page_source()?);
        let root = resolve_scope(&doc, scope).map_err(|e| BrowserError::ElementNotFound(e.to_string()))?;
        Ok(invalid_fields(&doc, &root, |f| self.field_value(f))?.into_iter().map(|(f, _)| f).collect())
    }

    fn close(&mut self) -> Result<(), BrowserError> {
        let path = format!("/session/{}", self.session_id);
        let (status, reply) = self.transport.request(HttpMethod::Delete, &path, None).map_err(transport_error)?;
        if status == 200 {
            Ok(())
        } else {
            Err(map_error(status, &reply))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::VecDeque;

    /// Replays canned replies and records requests.
    #[derive(Default)]
    struct Scripted {
        replies: VecDeque<(u16, Value)>,
        log: Vec<(HttpMethod, String, Option<Value>)>,
        slept: u64,
    }

    impl Transport for Scripted {
        fn request(&mut self, method: HttpMethod, path: &str, body: Option<&Value>) -> Result<(u16, Value), TransportError> {
            self.log.push((method, path.to_string(), body.cloned()));
            self.replies.pop_front().ok_or(TransportError::Connection("no reply".into()))
        }
        fn sleep_ms(&mut self, ms: u64) {
            self.slept += ms;
        }
    }

    fn ok(value: Value) -> (u16, Value) {
        (200, json!({ "value": value }))
    }

    fn connect(replies: Vec<(u16, Value)>) -> WebDriverSession<Scripted> {
        let mut all = alloc::vec![ok(json!({ "sessionId": "s1", "capabilities": {} })), ok(Value::Null)];
        all.extend(replies);
        let t = Scripted { replies: all.into(), ..Default::default() };
        let config = SessionConfig { politeness_delay_ms: 5, ..Default::default() };
        WebDriverSession::connect(t, config, json!({ "browserName": "firefox" })).unwrap()
    }

    #[test]
    fn navigate_and_source() {
        let mut s = connect(alloc::vec![ok(Value::Null), ok(json!("http://x.test/a/#f")), ok(json!("<p>hi</p>"))]);
        s.navigate("http://x.test/a/").unwrap();
        assert_eq!(s.current_url().unwrap(), "http://x.test/a");
        assert_eq!(s.page_source().unwrap(), "<p>hi</p>");
        let log = &s.transport().log;
        assert_eq!(log[0].1, "/session");
        assert_eq!(log[2].1, "/session/s1/url");
        assert_eq!(log[2].2, Some(json!({ "url": "http://x.test/a/" })));
        assert_eq!(s.transport().slept, 5);
    }

    #[test]
    fn set_value_clears_then_types() {
        let found = ok(json!([{ ELEMENT_KEY: "e7" }]));
        let mut s = connect(alloc::vec![found, ok(Value::Null), ok(Value::Null)]);
        s.interact(&ElementRef::id("q"), &Action::SetValue("abc".into())).unwrap();
        let log = &s.transport().log;
        assert_eq!(log[2].2, Some(json!({ "using": "css selector", "value": "[id=\"q\"]" })));
        assert_eq!(log[3].1, "/session/s1/element/e7/clear");
        assert_eq!(log[4].1, "/session/s1/element/e7/value");
        assert_eq!(log[4].2, Some(json!({ "text": "abc" })));
    }

    #[test]
    fn errors_are_mapped() {
        let mut s = connect(alloc::vec![ok(json!([]))]);
        assert!(matches!(s.interact(&ElementRef::css("#nope"), &Action::Click), Err(BrowserError::ElementNotFound(_))));
        let mut s = connect(alloc::vec![(404, json!({ "value": { "error": "invalid session id", "message": "gone" } }))]);
        assert_eq!(s.page_source(), Err(BrowserError::SessionLost("gone".into())));
    }
}

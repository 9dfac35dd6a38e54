//! Script dialects: canonical JSON and a Python Selenium program.

use alloc::format;
use alloc::string::{String, ToString};

use super::{TestCommand, TestScript};
use crate::dom::{css_attr_equals, ControlType, ElementRef, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    NativeJson,
    WebdriverText,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("unknown dialect {0:?}, expected native-json or webdriver-text")]
    UnknownDialect(String),
    #[error("invalid script: {0}")]
    Invalid(String),
}

impl Dialect {
    pub fn parse(s: &str) -> Result<Dialect, RenderError> {
        match s {
            "native-json" | "json" => Ok(Dialect::NativeJson),
            "webdriver-text" | "python" => Ok(Dialect::WebdriverText),
            other => Err(RenderError::UnknownDialect(other.to_string())),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Dialect::NativeJson => "json",
            Dialect::WebdriverText => "py",
        }
    }
}

pub fn render_script(script: &TestScript, dialect: Dialect) -> String {
    match dialect {
        Dialect::NativeJson => {
            let mut out = serde_json::to_string_pretty(script).unwrap_or_default();
            out.push('\n');
            out
        }
        Dialect::WebdriverText => render_python(script),
    }
}

pub fn parse_native(text: &str) -> Result<TestScript, RenderError> {
    serde_json::from_str(text).map_err(|e| RenderError::Invalid(e.to_string()))
}

fn py_str(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| String::from("\"\""))
}

fn by(locator: &ElementRef) -> String {
    let (kind, value) = match locator.strategy {
        Strategy::Id => ("By.ID", &locator.value),
        Strategy::Name => ("By.NAME", &locator.value),
        Strategy::Css => ("By.CSS_SELECTOR", &locator.value),
        Strategy::Xpath => ("By.XPATH", &locator.value),
    };
    format!("{}, {}", kind, py_str(value))
}

fn find(locator: &ElementRef) -> String {
    format!("driver.find_element({})", by(locator))
}

fn render_python(script: &TestScript) -> String {
    let mut out = String::new();
    let emit = |out: &mut String, line: &str| {
        out.push_str("    ");
        out.push_str(line);
        out.push('\n');
    };
    out.push_str(&format!("# Form test {} for state {} of {}\n", script.id, script.target_state, script.form));
    out.push_str(concat!(
        "from selenium import webdriver\n",
        "from selenium.webdriver.common.by import By\n",
        "from selenium.webdriver.support.ui import Select\n",
        "\n",
        "driver = webdriver.Chrome()\n",
        "invalid = None\n",
        "try:\n",
    ));
    if script.commands.is_empty() {
        emit(&mut out, "pass");
    }
    for command in &script.commands {
        match command {
            TestCommand::Navigate { url } => emit(&mut out, &format!("driver.get({})", py_str(url))),
            TestCommand::Click { locator } | TestCommand::Toggle { locator, .. } => {
                emit(&mut out, &format!("{}.click()", find(locator)))
            }
            TestCommand::SetValue { locator, value, .. } => {
                emit(&mut out, &format!("field = {}", find(locator)));
                emit(&mut out, "field.clear()");
                emit(&mut out, &format!("field.send_keys({})", py_str(value)));
            }
            TestCommand::SelectOption { locator, value, control: ControlType::Radio } => {
                let option = format!("input[type=\"radio\"]{}", css_attr_equals("value", value));
                emit(&mut out, &format!("group = {}.get_attribute(\"name\")", find(locator)));
                emit(&mut out, &format!("driver.find_element(By.CSS_SELECTOR, {} + '[name=\"' + group + '\"]').click()", py_str(&option)));
            }
            TestCommand::SelectOption { locator, value, .. } => {
                emit(&mut out, &format!("Select({}).select_by_value({})", find(locator), py_str(value)))
            }
            TestCommand::AssertVisible { locator } => emit(&mut out, &format!("assert {}.is_displayed()", find(locator))),
            TestCommand::Submit { locator } => {
                emit(&mut out, &format!("form = {}", find(locator)));
                emit(&mut out, "invalid = form.find_elements(By.CSS_SELECTOR, \":invalid\")");
                emit(&mut out, "form.submit()");
            }
            TestCommand::AssertNoValidationError => {
                emit(&mut out, "assert invalid == [], \"fields failed validation at submit\"")
            }
        }
    }
    out.push_str("finally:\n    driver.quit()\n");
    out
}
